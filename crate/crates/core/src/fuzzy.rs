//! Zero-order Sugeno inference over a single clipped input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMf {
    pub center: f64,
    pub width: f64,
}

impl GaussianMf {
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !(center.is_finite() && width.is_finite() && width > 0.0) {
            return Err(Error::Config(format!(
                "gaussian membership needs finite center and width > 0, got ({center}, {width})"
            )));
        }
        Ok(Self { center, width })
    }

    pub fn membership(&self, x: f64) -> f64 {
        let d = (x - self.center) / self.width;
        (-0.5 * d * d).exp()
    }
}

/// Antecedent partition of the input universe; one rule per membership function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleBaseSpec", into = "RuleBaseSpec")]
pub struct RuleBase {
    labels: Vec<String>,
    mfs: Vec<GaussianMf>,
    universe: (f64, f64),
}

/// Serialized shape of a [`RuleBase`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleBaseSpec {
    pub labels: Vec<String>,
    pub centers: Vec<f64>,
    pub width: f64,
    pub universe: [f64; 2],
}

impl Default for RuleBaseSpec {
    fn default() -> Self {
        Self {
            labels: ["NB", "NS", "Z", "PS", "PB"].map(String::from).to_vec(),
            centers: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            width: 0.425,
            universe: [-2.0, 2.0],
        }
    }
}

impl TryFrom<RuleBaseSpec> for RuleBase {
    type Error = Error;

    fn try_from(s: RuleBaseSpec) -> Result<Self> {
        if s.labels.len() != s.centers.len() {
            return Err(Error::Config(format!(
                "{} labels for {} membership functions",
                s.labels.len(),
                s.centers.len()
            )));
        }
        let mfs = s
            .centers
            .iter()
            .map(|&c| GaussianMf::new(c, s.width))
            .collect::<Result<Vec<_>>>()?;
        RuleBase::new(s.labels, mfs, (s.universe[0], s.universe[1]))
    }
}

impl From<RuleBase> for RuleBaseSpec {
    fn from(r: RuleBase) -> Self {
        Self {
            width: r.mfs.first().map_or(0.0, |m| m.width),
            centers: r.mfs.iter().map(|m| m.center).collect(),
            labels: r.labels,
            universe: [r.universe.0, r.universe.1],
        }
    }
}

impl Default for RuleBase {
    fn default() -> Self {
        RuleBase::try_from(RuleBaseSpec::default()).expect("default rule base is valid")
    }
}

impl RuleBase {
    pub fn new(labels: Vec<String>, mfs: Vec<GaussianMf>, universe: (f64, f64)) -> Result<Self> {
        if mfs.is_empty() {
            return Err(Error::Config("rule base needs at least one rule".into()));
        }
        if labels.len() != mfs.len() {
            return Err(Error::Config("one label per membership function required".into()));
        }
        if !mfs.windows(2).all(|w| w[1].center > w[0].center) {
            return Err(Error::Config("membership centers must be strictly increasing".into()));
        }
        if !(universe.0.is_finite() && universe.1.is_finite() && universe.0 < universe.1) {
            return Err(Error::Config(format!("invalid input universe {universe:?}")));
        }
        Ok(Self {
            labels,
            mfs,
            universe,
        })
    }

    pub fn len(&self) -> usize {
        self.mfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mfs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn membership_functions(&self) -> &[GaussianMf] {
        &self.mfs
    }

    pub fn universe(&self) -> (f64, f64) {
        self.universe
    }

    pub fn clip(&self, x: f64) -> f64 {
        x.clamp(self.universe.0, self.universe.1)
    }

    /// Firing strength of every rule for the clipped input.
    pub fn fire(&self, zeta: f64) -> Vec<f64> {
        let x = self.clip(zeta);
        self.mfs.iter().map(|m| m.membership(x)).collect()
    }
}

/// Firing-strength weighted average of per-rule consequents.
pub fn defuzzify(w: &[f64], phi: &[f64]) -> Result<f64> {
    if w.len() != phi.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: phi.len(),
        });
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!("sum of firing strengths is {total}")));
    }
    let num: f64 = w.iter().zip(phi).map(|(w, p)| w * p).sum();
    Ok(num / total)
}

/// Fixed-consequent Sugeno system.
#[derive(Debug, Clone, PartialEq)]
pub struct SugenoFis {
    pub rules: RuleBase,
    pub consequents: Vec<f64>,
}

impl SugenoFis {
    pub fn new(rules: RuleBase, consequents: Vec<f64>) -> Result<Self> {
        if consequents.len() != rules.len() {
            return Err(Error::DimensionMismatch {
                expected: rules.len(),
                got: consequents.len(),
            });
        }
        Ok(Self { rules, consequents })
    }

    pub fn evaluate(&self, zeta: f64) -> Result<f64> {
        defuzzify(&self.rules.fire(zeta), &self.consequents)
    }
}
