//! Strictly negative imaginary (SNI) tracking controller `N(s) = gamma/(tau s + 1) - beta`
//! and the checks used to certify the closed loop against the double-integrator plant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible filter time constant [s].
pub const TAU_MIN: f64 = 1e-3;

/// Gains of one SNI channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SniGains {
    /// DC gain of the first-order path.
    pub gamma: f64,
    /// Filter time constant [s].
    pub tau: f64,
    /// Feed-forward gain.
    pub beta: f64,
}

impl Default for SniGains {
    fn default() -> Self {
        Self::with_unit_margin(5.0, 0.1)
    }
}

impl SniGains {
    /// Gains with `beta = gamma + 1`, i.e. controller DC gain of -1.
    pub fn with_unit_margin(gamma: f64, tau: f64) -> Self {
        Self {
            gamma,
            tau,
            beta: gamma + 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.tau.is_finite() && self.tau >= TAU_MIN) {
            return Err(Error::Config(format!("tau must be >= {TAU_MIN}, got {}", self.tau)));
        }
        if !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be finite, got {}", self.beta)));
        }
        Ok(())
    }

    /// `N(0) = gamma - beta`.
    pub fn dc_gain(&self) -> f64 {
        self.gamma - self.beta
    }
}

/// Admissible box for online gain adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainBounds {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Default for GainBounds {
    fn default() -> Self {
        Self {
            gamma_min: 0.1,
            gamma_max: 100.0,
            tau_min: TAU_MIN,
            tau_max: 1.0,
        }
    }
}

impl GainBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma_min > 0.0
            && self.gamma_min <= self.gamma_max
            && self.tau_min >= TAU_MIN
            && self.tau_min <= self.tau_max
            && self.gamma_max.is_finite()
            && self.tau_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid gain bounds {self:?}")))
        }
    }

    pub fn contains(&self, g: &SniGains) -> bool {
        (self.gamma_min..=self.gamma_max).contains(&g.gamma) && (self.tau_min..=self.tau_max).contains(&g.tau)
    }
}

/// Internal state of the first-order filter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SniState {
    pub xf: f64,
}

/// One sample of the controller under zero-order hold.
///
/// The pole `exp(-dt/tau)` is recomputed from the current gains every call, so
/// gains may change between samples.
pub fn sni_step(st: SniState, e: f64, gains: &SniGains, dt: f64) -> (SniState, f64) {
    let a = (-dt / gains.tau).exp();
    let xf = a * st.xf + (1.0 - a) * e;
    (SniState { xf }, gains.gamma * xf - gains.beta * e)
}

/// `j(N(jw) - N(jw)^*) = 2 gamma w tau / (1 + w^2 tau^2)`; `beta` cancels.
pub fn sni_imaginary_margin(gains: &SniGains, omega: f64) -> f64 {
    let wt = omega * gains.tau;
    2.0 * gains.gamma * wt / (1.0 + wt * wt)
}

/// True iff the strict frequency inequality holds at every grid point.
pub fn sni_frequency_condition(gains: &SniGains, omega_grid: &[f64]) -> Result<bool> {
    if omega_grid.is_empty() {
        return Err(Error::Domain("empty frequency grid".into()));
    }
    if let Some(w) = omega_grid.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::Domain(format!("frequencies must be > 0, got {w}")));
    }
    Ok(omega_grid.iter().all(|&w| sni_imaginary_margin(gains, w) > 0.0))
}

/// `n` log-spaced frequencies between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

/// Default check grid: 200 points over `[1e-2, 1e4]` rad/s.
pub fn default_frequency_grid() -> Vec<f64> {
    log_grid(1e-2, 1e4, 200)
}

/// Interconnection stability against the double integrator: requires `gamma < beta`.
pub fn dc_gain_stability(gamma: f64, beta: f64) -> bool {
    gamma - beta < 0.0
}

/// DC-gain condition: the largest real part among eigenvalues of `P(0) N(0)` is below 1.
pub fn lemma1_check(p_dc: &DMatrix<f64>, n_dc: &DMatrix<f64>) -> Result<bool> {
    if !p_dc.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p_dc.nrows(),
            got: p_dc.ncols(),
        });
    }
    if n_dc.shape() != p_dc.shape() {
        return Err(Error::DimensionMismatch {
            expected: p_dc.nrows(),
            got: n_dc.nrows(),
        });
    }
    let product = p_dc * n_dc;
    let lambda_max = max_real_eigenvalue(&product)?;
    Ok(lambda_max < 1.0)
}

/// Largest real part over the spectrum of a square matrix.
pub fn max_real_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("non-finite matrix entry".into()));
    }
    if is_diagonal(m) {
        return Ok(m.diagonal().iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let eig = m.clone().complex_eigenvalues();
    Ok(eig.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max))
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Diagonal `N(0)` built from per-channel gains.
pub fn controller_dc_matrix(gains: &[SniGains]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        gains.len(),
        gains.iter().map(SniGains::dc_gain),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_is_dc_gain() {
        let g = SniGains::with_unit_margin(5.0, 0.1);
        let mut st = SniState::default();
        let mut u = 0.0;
        for _ in 0..2000 {
            (st, u) = sni_step(st, 1.0, &g, 0.01);
        }
        assert!((u + 1.0).abs() < 1e-12, "{u}");
    }

    #[test]
    fn discrete_pole() {
        let g = SniGains::with_unit_margin(5.0, 0.1);
        let (st, _) = sni_step(SniState { xf: 1.0 }, 0.0, &g, 0.01);
        assert!((st.xf - 0.904837418).abs() < 1e-9);
        assert!((st.xf - (-0.1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_error_zero_output() {
        let g = SniGains::default();
        let mut st = SniState::default();
        for _ in 0..100 {
            let (s, u) = sni_step(st, 0.0, &g, 0.01);
            assert_eq!(u, 0.0);
            st = s;
        }
    }

    #[test]
    fn matches_continuous_step_response() {
        let g = SniGains::with_unit_margin(3.0, 0.25);
        let mut st = SniState::default();
        for k in 1..=500 {
            st = sni_step(st, 1.0, &g, 0.01).0;
            let t = k as f64 * 0.01;
            assert!((st.xf - (1.0 - (-t / g.tau).exp())).abs() < 1e-10);
        }
    }

    #[test]
    fn frequency_condition_cases() {
        let grid = log_grid(0.01, 1000.0, 50);
        assert!(sni_frequency_condition(&SniGains::with_unit_margin(5.0, 0.1), &grid).unwrap());
        let neg = SniGains {
            gamma: -1.0,
            tau: 0.3,
            beta: 0.0,
        };
        assert!(!sni_frequency_condition(&neg, &grid).unwrap());
        let zero = SniGains {
            gamma: 0.0,
            tau: 0.3,
            beta: 1.0,
        };
        assert!(!sni_frequency_condition(&zero, &grid).unwrap());
        assert!(sni_frequency_condition(&zero, &[]).is_err());
        assert!(sni_frequency_condition(&zero, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn dc_gain_predicate() {
        assert!(dc_gain_stability(5.0, 6.0));
        assert!(!dc_gain_stability(3.0, 3.0));
        assert!(!dc_gain_stability(2.0, 1.0));
    }

    #[test]
    fn lemma1_cases() {
        let p = DMatrix::from_diagonal_element(4, 4, 1e6);
        let n = DMatrix::from_diagonal_element(4, 4, -1.0);
        assert!(lemma1_check(&p, &n).unwrap());
        let i = DMatrix::<f64>::identity(4, 4);
        assert!(!lemma1_check(&i, &i).unwrap());
        let bad = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(lemma1_check(&i, &bad), Err(Error::DimensionMismatch { .. })));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(lemma1_check(&rect, &rect).is_err());
    }

    #[test]
    fn general_eigenvalue_path() {
        // rotation-like block with eigenvalues 0.5 +- 2i, plus 0.9
        let m = DMatrix::from_row_slice(3, 3, &[0.5, -2.0, 0.0, 2.0, 0.5, 0.0, 0.3, 0.1, 0.9]);
        assert!((max_real_eigenvalue(&m).unwrap() - 0.9).abs() < 1e-10);
        let n = DMatrix::<f64>::identity(3, 3);
        assert!(lemma1_check(&m, &n).unwrap());
    }

    #[test]
    fn grid_shape() {
        let g = default_frequency_grid();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[199] - 1e4).abs() < 1e-8);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gain_validation() {
        assert!(SniGains::default().validate().is_ok());
        assert!(SniGains::with_unit_margin(0.0, 0.1).validate().is_err());
        assert!(SniGains::with_unit_margin(1.0, 1e-4).validate().is_err());
        assert!(GainBounds::default().validate().is_ok());
    }
}
