//! Tracking controllers that map a channel's tracking error `e = r - y` to the
//! virtual acceleration `v` of the linearized plant.
//!
//! The SNI family closes the loop in positive feedback on `y - r`, so the
//! virtual input is `v = -N(s) e`. With the controller DC gain `gamma - beta`
//! negative this is the stable interconnection with the double integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fql::{apply_gain_update, reward, AgentOutputs, FqlAgent, FqlHyperParams, RuleQTable};
use crate::fuzzy::{RuleBase, SugenoFis};
use crate::ni_core::{dc_gain_stability, sni_step, GainBounds, SniGains, SniState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Roll,
    Pitch,
    Yaw,
    Z,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Roll, Channel::Pitch, Channel::Yaw, Channel::Z];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Roll => "roll",
            Channel::Pitch => "pitch",
            Channel::Yaw => "yaw",
            Channel::Z => "z",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Pid,
    Sni,
    FuzzySni,
    FuzzyQlSni,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Pid => "pid",
            ControllerKind::Sni => "sni",
            ControllerKind::FuzzySni => "fuzzy-sni",
            ControllerKind::FuzzyQlSni => "fuzzy-ql-sni",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pid" => Ok(Self::Pid),
            "sni" => Ok(Self::Sni),
            "fuzzy-sni" => Ok(Self::FuzzySni),
            "fuzzy-ql-sni" => Ok(Self::FuzzyQlSni),
            other => Err(Error::Config(format!("unknown controller kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative filter time constant [s]; zero gives a raw backward difference.
    pub tf: f64,
    /// Bound on the accumulated integral of the error.
    pub integrator_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.0,
            ki: 0.2,
            kd: 0.5,
            tf: 0.05,
            integrator_limit: 1.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.kp, self.ki, self.kd, self.tf].iter().all(|v| v.is_finite());
        if !finite || self.tf < 0.0 {
            return Err(Error::Config(format!("invalid PID gains {self:?}")));
        }
        if !(self.integrator_limit.is_finite() && self.integrator_limit > 0.0) {
            return Err(Error::Config("PID integrator limit must be > 0".into()));
        }
        Ok(())
    }
}

/// Parallel PID with a first-order filtered derivative and a clamped integrator.
#[derive(Debug, Clone)]
pub struct Pid {
    pub gains: PidGains,
    integral: f64,
    derivative: f64,
    prev_error: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Result<Self> {
        gains.validate()?;
        Ok(Self {
            gains,
            integral: 0.0,
            derivative: 0.0,
            prev_error: None,
        })
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn step(&mut self, e: f64, dt: f64) -> f64 {
        let g = &self.gains;
        let lim = g.integrator_limit;
        self.integral = (self.integral + e * dt).clamp(-lim, lim);
        // no derivative kick on the first sample
        if let Some(prev) = self.prev_error {
            self.derivative = (g.tf * self.derivative + (e - prev)) / (g.tf + dt);
        }
        self.prev_error = Some(e);
        g.kp * e + g.ki * self.integral + g.kd * self.derivative
    }
}

/// Fixed-gain SNI channel.
#[derive(Debug, Clone)]
pub struct FixedSni {
    gains: SniGains,
    state: SniState,
}

impl FixedSni {
    pub fn new(gains: SniGains) -> Result<Self> {
        gains.validate()?;
        Ok(Self {
            gains,
            state: SniState::default(),
        })
    }

    pub fn gains(&self) -> SniGains {
        self.gains
    }

    pub fn step(&mut self, e: f64, dt: f64) -> f64 {
        let (st, u) = sni_step(self.state, e, &self.gains, dt);
        self.state = st;
        -u
    }
}

/// Expert consequents for the non-learning fuzzy gain scheduler, one per rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertTable {
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
}

impl Default for ExpertTable {
    /// Antisymmetric NB..PB table drawn from the same singleton sets as the learning agent.
    fn default() -> Self {
        Self {
            gamma: vec![20.0, 20.0, 0.0, -20.0, -20.0],
            tau: vec![0.002, 0.002, 0.0, -0.002, -0.002],
        }
    }
}

/// SNI channel whose gains drift under a fixed Sugeno scheduler.
#[derive(Debug, Clone)]
pub struct FuzzySni {
    gamma_fis: SugenoFis,
    tau_fis: SugenoFis,
    gains: SniGains,
    bounds: GainBounds,
    state: SniState,
}

impl FuzzySni {
    pub fn new(initial: SniGains, rules: RuleBase, table: &ExpertTable, bounds: GainBounds) -> Result<Self> {
        initial.validate()?;
        bounds.validate()?;
        Ok(Self {
            gamma_fis: SugenoFis::new(rules.clone(), table.gamma.clone())?,
            tau_fis: SugenoFis::new(rules, table.tau.clone())?,
            gains: initial,
            bounds,
            state: SniState::default(),
        })
    }

    pub fn gains(&self) -> SniGains {
        self.gains
    }

    pub fn step(&mut self, e: f64, dt: f64) -> Result<f64> {
        let phi = AgentOutputs {
            delta_gamma: self.gamma_fis.evaluate(e)?,
            delta_tau: self.tau_fis.evaluate(e)?,
        };
        self.gains = apply_gain_update(&self.gains, &phi, dt, &self.bounds);
        let (st, u) = sni_step(self.state, e, &self.gains, dt);
        self.state = st;
        Ok(-u)
    }
}

/// Competing singleton actions of the two learning agents.
///
/// The hold action comes first so an untrained table (all ties) keeps gains unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSets {
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
}

impl Default for ActionSets {
    fn default() -> Self {
        Self {
            gamma: vec![0.0, -20.0, 20.0],
            tau: vec![0.0, -0.002, 0.002],
        }
    }
}

/// SNI channel with gains adapted online by two fuzzy Q-learning agents.
#[derive(Debug, Clone)]
pub struct FuzzyQlSni {
    gamma_agent: FqlAgent,
    tau_agent: FqlAgent,
    gains: SniGains,
    bounds: GainBounds,
    state: SniState,
    prev_error: Option<f64>,
    last_reward: f64,
}

impl FuzzyQlSni {
    /// `stream` separates the random streams of agents sharing one seed.
    pub fn new(
        initial: SniGains,
        rules: RuleBase,
        actions: &ActionSets,
        hp: FqlHyperParams,
        bounds: GainBounds,
        stream: u64,
    ) -> Result<Self> {
        initial.validate()?;
        bounds.validate()?;
        Ok(Self {
            gamma_agent: FqlAgent::new(rules.clone(), actions.gamma.clone(), hp, 2 * stream)?,
            tau_agent: FqlAgent::new(rules, actions.tau.clone(), hp, 2 * stream + 1)?,
            gains: initial,
            bounds,
            state: SniState::default(),
            prev_error: None,
            last_reward: 0.0,
        })
    }

    pub fn gains(&self) -> SniGains {
        self.gains
    }

    pub fn last_reward(&self) -> f64 {
        self.last_reward
    }

    pub fn gamma_agent(&self) -> &FqlAgent {
        &self.gamma_agent
    }

    pub fn tau_agent(&self) -> &FqlAgent {
        &self.tau_agent
    }

    pub fn step(&mut self, e: f64, t: f64, dt: f64) -> Result<f64> {
        if let Some(prev) = self.prev_error {
            let r = reward(e, prev);
            self.gamma_agent.learn(e, r)?;
            self.tau_agent.learn(e, r)?;
            self.last_reward = r;
        }
        self.prev_error = Some(e);

        let phi = AgentOutputs {
            delta_gamma: self.gamma_agent.act(e, t)?,
            delta_tau: self.tau_agent.act(e, t)?,
        };
        self.gains = apply_gain_update(&self.gains, &phi, dt, &self.bounds);
        debug_assert!(dc_gain_stability(self.gains.gamma, self.gains.beta));
        let (st, u) = sni_step(self.state, e, &self.gains, dt);
        self.state = st;
        Ok(-u)
    }
}

/// Any of the four controllers behind one step interface.
#[derive(Debug, Clone)]
pub enum ChannelController {
    Pid(Pid),
    Sni(FixedSni),
    FuzzySni(FuzzySni),
    FuzzyQlSni(Box<FuzzyQlSni>),
}

impl ChannelController {
    pub fn kind(&self) -> ControllerKind {
        match self {
            Self::Pid(_) => ControllerKind::Pid,
            Self::Sni(_) => ControllerKind::Sni,
            Self::FuzzySni(_) => ControllerKind::FuzzySni,
            Self::FuzzyQlSni(_) => ControllerKind::FuzzyQlSni,
        }
    }

    /// Virtual input for tracking error `e` sampled at time `t`.
    pub fn step(&mut self, e: f64, t: f64, dt: f64) -> Result<f64> {
        if !e.is_finite() {
            return Err(Error::Domain(format!("non-finite tracking error {e}")));
        }
        let v = match self {
            Self::Pid(c) => c.step(e, dt),
            Self::Sni(c) => c.step(e, dt),
            Self::FuzzySni(c) => c.step(e, dt)?,
            Self::FuzzyQlSni(c) => c.step(e, t, dt)?,
        };
        Ok(v)
    }

    pub fn sni_gains(&self) -> Option<SniGains> {
        match self {
            Self::Pid(_) => None,
            Self::Sni(c) => Some(c.gains()),
            Self::FuzzySni(c) => Some(c.gains()),
            Self::FuzzyQlSni(c) => Some(c.gains()),
        }
    }

    pub fn last_reward(&self) -> f64 {
        match self {
            Self::FuzzyQlSni(c) => c.last_reward(),
            _ => 0.0,
        }
    }

    /// Discounted returns of the (gamma, tau) agents, when learning.
    pub fn discounted_returns(&self) -> Option<(f64, f64)> {
        match self {
            Self::FuzzyQlSni(c) => Some((c.gamma_agent.discounted_return(), c.tau_agent.discounted_return())),
            _ => None,
        }
    }

    pub fn q_tables(&self) -> Option<[(&str, &RuleQTable, &FqlAgent); 2]> {
        match self {
            Self::FuzzyQlSni(c) => Some([
                ("gamma", c.gamma_agent.table(), &c.gamma_agent),
                ("tau", c.tau_agent.table(), &c.tau_agent),
            ]),
            _ => None,
        }
    }
}
