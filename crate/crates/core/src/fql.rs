//! Fuzzy Q-learning: each rule of a Sugeno partition carries a small set of
//! competing singleton actions scored by q-values.
//!
//! One learning cycle per control sample:
//! 1. fire the rules on the current error and pick one action per rule,
//! 2. emit the firing-strength weighted global action and remember `Q(S_t, A_t)`,
//! 3. on the next sample, score the transition with [`reward`] and apply [`update`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{defuzzify, RuleBase};
use crate::ni_core::{GainBounds, SniGains};

/// Range the error is clipped to before it reaches the agent or the reward.
pub const ERROR_CLIP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FqlHyperParams {
    /// Learning rate.
    pub eta: f64,
    /// Discount factor.
    pub sigma: f64,
    /// Initial pure-exploration phase [s].
    pub explore_duration: f64,
    /// Exploration probability after the initial phase.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for FqlHyperParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            sigma: 0.7,
            explore_duration: 0.7,
            epsilon: 0.01,
            seed: 42,
        }
    }
}

impl FqlHyperParams {
    pub fn validate(&self) -> Result<()> {
        // eta = 0 freezes learning; kept legal for degenerate comparisons.
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta must be in [0, 1], got {}", self.eta)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Config(format!("sigma must be in (0, 1), got {}", self.sigma)));
        }
        if !(self.explore_duration.is_finite() && self.explore_duration >= 0.0) {
            return Err(Error::Config(format!(
                "explore_duration must be >= 0, got {}",
                self.explore_duration
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must be in [0, 1], got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// q-values of `J` competing actions for each of `n` rules, plus the last pick per rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleQTable {
    q: Vec<Vec<f64>>,
    pub chosen: Vec<usize>,
}

impl RuleQTable {
    pub fn zeros(rules: usize, actions: usize) -> Self {
        Self {
            q: vec![vec![0.0; actions]; rules],
            chosen: vec![0; rules],
        }
    }

    pub fn from_rows(q: Vec<Vec<f64>>) -> Result<Self> {
        let j = q.first().map_or(0, Vec::len);
        if q.is_empty() || j == 0 || q.iter().any(|r| r.len() != j) {
            return Err(Error::Config("q-table must be a non-empty rectangular grid".into()));
        }
        if q.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite q-value".into()));
        }
        let n = q.len();
        Ok(Self {
            q,
            chosen: vec![0; n],
        })
    }

    pub fn rules(&self) -> usize {
        self.q.len()
    }

    pub fn actions(&self) -> usize {
        self.q.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn get(&self, rule: usize, action: usize) -> f64 {
        self.q[rule][action]
    }

    /// Index of the best action in a rule; ties go to the lowest index.
    pub fn argmax(&self, rule: usize) -> usize {
        let row = &self.q[rule];
        let mut best = 0;
        for (j, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = j;
            }
        }
        best
    }

    pub fn row_max(&self, rule: usize) -> f64 {
        self.q[rule][self.argmax(rule)]
    }

    /// `rule,a0,a1,...` lines with a header naming each action by its consequent.
    pub fn to_csv(&self, labels: &[String], actions: &[f64]) -> String {
        let mut out = String::from("rule");
        for a in actions {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for (i, row) in self.q.iter().enumerate() {
            out.push_str(labels.get(i).map_or("?", String::as_str));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-rule action choice under the exploration schedule.
///
/// Before `explore_duration` every rule draws uniformly; afterwards each rule
/// independently takes its argmax with probability `1 - epsilon`.
pub fn select_actions(
    w: &[f64],
    q: &RuleQTable,
    t: f64,
    hp: &FqlHyperParams,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let j = q.actions();
    (0..q.rules())
        .map(|i| {
            if w.get(i).is_some_and(|w| *w <= 0.0) {
                return q.argmax(i);
            }
            let explore = t < hp.explore_duration || (hp.epsilon > 0.0 && rng.random::<f64>() < hp.epsilon);
            if explore {
                rng.random_range(0..j)
            } else {
                q.argmax(i)
            }
        })
        .collect()
}

/// Crisp action from the chosen per-rule consequents.
pub fn global_action(w: &[f64], chosen_consequents: &[f64]) -> Result<f64> {
    defuzzify(w, chosen_consequents)
}

/// `Q(S, A)`: weighted average of the chosen actions' q-values.
pub fn q_of_state_action(w: &[f64], q: &RuleQTable, chosen: &[usize]) -> Result<f64> {
    check_len(w, q)?;
    let vals: Vec<f64> = chosen.iter().enumerate().map(|(i, &j)| q.get(i, j)).collect();
    defuzzify(w, &vals)
}

/// `max_a Q(S, a)`: weighted average of per-rule row maxima.
pub fn max_q_of_state(w: &[f64], q: &RuleQTable) -> Result<f64> {
    check_len(w, q)?;
    let vals: Vec<f64> = (0..q.rules()).map(|i| q.row_max(i)).collect();
    defuzzify(w, &vals)
}

fn check_len(w: &[f64], q: &RuleQTable) -> Result<()> {
    if w.len() != q.rules() {
        return Err(Error::DimensionMismatch {
            expected: q.rules(),
            got: w.len(),
        });
    }
    Ok(())
}

/// Improvement-shaped reward: positive iff the clipped error magnitude shrank.
pub fn reward(e_next: f64, e_curr: f64) -> f64 {
    let a = e_next.clamp(-ERROR_CLIP, ERROR_CLIP).abs();
    let b = e_curr.clamp(-ERROR_CLIP, ERROR_CLIP).abs();
    1.0 / (1.0 + a) - 1.0 / (1.0 + b)
}

/// Temporal-difference update of the chosen entries; returns the TD error.
///
/// Only `q[i][chosen[i]]` of rules with positive firing strength change, each
/// by `eta * dQ * w_i / sum(w)`.
pub fn update(
    q: &mut RuleQTable,
    w_curr: &[f64],
    w_next: &[f64],
    chosen: &[usize],
    r: f64,
    hp: &FqlHyperParams,
) -> Result<f64> {
    if chosen.len() != q.rules() {
        return Err(Error::DimensionMismatch {
            expected: q.rules(),
            got: chosen.len(),
        });
    }
    let q_sa = q_of_state_action(w_curr, q, chosen)?;
    let q_next = max_q_of_state(w_next, q)?;
    let td = r + hp.sigma * q_next - q_sa;
    let total: f64 = w_curr.iter().sum();
    for (i, (&w, &j)) in w_curr.iter().zip(chosen).enumerate() {
        if w > 0.0 {
            q.q[i][j] += hp.eta * td * (w / total);
        }
    }
    q.chosen.copy_from_slice(chosen);
    Ok(td)
}

/// `sum_k sigma^k r_k`.
pub fn discounted_return(rewards: &[f64], sigma: f64) -> f64 {
    let mut acc = 0.0;
    let mut disc = 1.0;
    for r in rewards {
        acc += disc * r;
        disc *= sigma;
    }
    acc
}

/// Adapted increments: rates for gamma [1/s] and tau [s/s].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgentOutputs {
    pub delta_gamma: f64,
    pub delta_tau: f64,
}

/// Integrate the increments over one sample, clamp to the box and restore `beta = gamma + 1`.
pub fn apply_gain_update(gains: &SniGains, phi: &AgentOutputs, dt: f64, bounds: &GainBounds) -> SniGains {
    let gamma = (gains.gamma + phi.delta_gamma * dt).clamp(bounds.gamma_min, bounds.gamma_max);
    let tau = (gains.tau + phi.delta_tau * dt).clamp(bounds.tau_min, bounds.tau_max);
    SniGains::with_unit_margin(gamma, tau)
}

/// Remembered half of a transition, completed on the next sample.
#[derive(Debug, Clone)]
struct Pending {
    w: Vec<f64>,
    chosen: Vec<usize>,
}

/// A fuzzy Q-learning agent driving one output variable.
#[derive(Debug, Clone)]
pub struct FqlAgent {
    rules: RuleBase,
    actions: Vec<f64>,
    table: RuleQTable,
    hp: FqlHyperParams,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    rewards: Vec<f64>,
}

impl FqlAgent {
    /// `actions` are the competing singleton consequents shared by every rule.
    pub fn new(rules: RuleBase, actions: Vec<f64>, hp: FqlHyperParams, stream: u64) -> Result<Self> {
        hp.validate()?;
        if actions.is_empty() || actions.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("agent needs at least one finite action".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        rng.set_stream(stream);
        let table = RuleQTable::zeros(rules.len(), actions.len());
        Ok(Self {
            rules,
            actions,
            table,
            hp,
            rng,
            pending: None,
            rewards: Vec::new(),
        })
    }

    pub fn table(&self) -> &RuleQTable {
        &self.table
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn discounted_return(&self) -> f64 {
        discounted_return(&self.rewards, self.hp.sigma)
    }

    /// Choose per-rule actions for the current error and return the global action.
    pub fn act(&mut self, error: f64, t: f64) -> Result<f64> {
        let w = self.rules.fire(error);
        let chosen = select_actions(&w, &self.table, t, &self.hp, &mut self.rng);
        let consequents: Vec<f64> = chosen.iter().map(|&j| self.actions[j]).collect();
        let a = global_action(&w, &consequents)?;
        self.table.chosen.copy_from_slice(&chosen);
        self.pending = Some(Pending { w, chosen });
        Ok(a)
    }

    /// Close the pending transition with the observed next error and reward.
    pub fn learn(&mut self, next_error: f64, r: f64) -> Result<()> {
        if let Some(p) = self.pending.take() {
            let w_next = self.rules.fire(next_error);
            update(&mut self.table, &p.w, &w_next, &p.chosen, r, &self.hp)?;
            self.rewards.push(r);
        }
        Ok(())
    }
}
