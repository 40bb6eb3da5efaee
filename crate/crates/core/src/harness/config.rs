//! Scenario configuration, read from a sectioned TOML file.
//!
//! ```toml
//! [run]
//! duration = 20.0
//! dt = 0.01
//! seed = 42
//!
//! [controllers]
//! roll = "fuzzy-ql-sni"
//! pitch = "sni"
//! yaw = "fuzzy-sni"
//! z = "pid"
//!
//! [references.z]
//! kind = "constant-after-delay"
//! amplitude = 1.5
//! start = 1.0
//! ```
//!
//! Every section is optional; missing values fall back to [`ScenarioConfig::nominal`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::{ActionSets, Channel, ControllerKind, ExpertTable, PidGains};
use crate::disturbances::{Axis, DrydenConfig, OneMinusCosConfig, ParamBias};
use crate::error::{Error, Result};
use crate::fql::FqlHyperParams;
use crate::fuzzy::{RuleBase, RuleBaseSpec};
use crate::harness::reference::ReferenceProfile;
use crate::ni_core::{GainBounds, SniGains};
use crate::plant::{ActuatorLimits, QuadParams};

/// One value per controlled channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerChannel<T> {
    pub roll: T,
    pub pitch: T,
    pub yaw: T,
    pub z: T,
}

impl<T: Clone> PerChannel<T> {
    pub fn splat(v: T) -> Self {
        Self {
            roll: v.clone(),
            pitch: v.clone(),
            yaw: v.clone(),
            z: v,
        }
    }
}

impl<T> PerChannel<T> {
    pub fn get(&self, ch: Channel) -> &T {
        match ch {
            Channel::Roll => &self.roll,
            Channel::Pitch => &self.pitch,
            Channel::Yaw => &self.yaw,
            Channel::Z => &self.z,
        }
    }

    pub fn get_mut(&mut self, ch: Channel) -> &mut T {
        match ch {
            Channel::Roll => &mut self.roll,
            Channel::Pitch => &mut self.pitch,
            Channel::Yaw => &mut self.yaw,
            Channel::Z => &mut self.z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Period of q-table snapshots [s]; zero keeps only the final tables.
    pub qtable_interval: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            duration: 20.0,
            dt: 0.01,
            seed: 42,
            output_dir: None,
            qtable_interval: 1.0,
        }
    }
}

/// Learning hyperparameters; the random seed comes from `[run]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FqlSection {
    pub eta: f64,
    pub sigma: f64,
    pub explore_duration: f64,
    pub epsilon: f64,
}

impl Default for FqlSection {
    fn default() -> Self {
        let d = FqlHyperParams::default();
        Self {
            eta: d.eta,
            sigma: d.sigma,
            explore_duration: d.explore_duration,
            epsilon: d.epsilon,
        }
    }
}

impl FqlSection {
    pub fn hyper_params(&self, seed: u64) -> FqlHyperParams {
        FqlHyperParams {
            eta: self.eta,
            sigma: self.sigma,
            explore_duration: self.explore_duration,
            epsilon: self.epsilon,
            seed,
        }
    }
}

/// Wind-to-airframe coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindSection {
    /// Quadratic drag coefficients on the wind velocity, per inertial axis [N s^2/m^2].
    pub drag: [f64; 3],
    /// Gain of the torque `kappa * (wind x body_z)` [N m s/m].
    pub kappa: f64,
}

impl Default for WindSection {
    fn default() -> Self {
        Self {
            drag: [0.02; 3],
            kappa: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run: RunSection,
    pub controllers: PerChannel<ControllerKind>,
    pub references: PerChannel<ReferenceProfile>,
    /// Initial gains of the SNI family (the only gains for fixed SNI).
    pub sni: PerChannel<SniGains>,
    pub pid: PerChannel<PidGains>,
    pub fql: FqlSection,
    pub actions: ActionSets,
    pub rule_base: RuleBaseSpec,
    pub expert: ExpertTable,
    pub bounds: GainBounds,
    /// True airframe before bias; also the nominal model of the linearizer.
    pub plant: QuadParams,
    pub bias: Option<ParamBias>,
    pub dryden: Option<DrydenConfig>,
    pub gust: Vec<OneMinusCosConfig>,
    pub wind: WindSection,
    pub limits: Option<ActuatorLimits>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::nominal()
    }
}

impl ScenarioConfig {
    /// Four-channel tracking task without disturbances, all channels on the learning controller.
    ///
    /// Roll follows a 0.5 rad / 4 s sine, pitch a 0.5 rad / 5 s square wave,
    /// yaw a 0.5 rad step at 1 s, altitude 1.5 m from 1 s on.
    pub fn nominal() -> Self {
        Self {
            run: RunSection::default(),
            controllers: PerChannel::splat(ControllerKind::FuzzyQlSni),
            references: PerChannel {
                roll: ReferenceProfile::sine(0.5, 4.0),
                pitch: ReferenceProfile::square(0.5, 5.0),
                yaw: ReferenceProfile::step(0.5, 1.0),
                z: ReferenceProfile::constant_after_delay(1.5, 1.0),
            },
            sni: PerChannel::splat(SniGains::with_unit_margin(5.0, 0.1)),
            pid: PerChannel::splat(PidGains::default()),
            fql: FqlSection::default(),
            actions: ActionSets::default(),
            rule_base: RuleBaseSpec::default(),
            expert: ExpertTable::default(),
            bounds: GainBounds::default(),
            plant: QuadParams::table(),
            bias: None,
            dryden: None,
            gust: Vec::new(),
            wind: WindSection::default(),
            limits: None,
        }
    }

    /// Nominal task plus 15 % mass/inertia bias, Dryden turbulence and two 1-cos pulses.
    pub fn disturbed() -> Self {
        let mut cfg = Self::nominal();
        cfg.bias = Some(ParamBias::default());
        cfg.dryden = Some(DrydenConfig::default());
        cfg.gust = vec![
            OneMinusCosConfig {
                amplitude: 3.0,
                duration: 1.0,
                start: 5.0,
                axis: Axis::X,
            },
            OneMinusCosConfig {
                amplitude: 3.0,
                duration: 1.0,
                start: 12.0,
                axis: Axis::Y,
            },
        ];
        cfg
    }

    pub fn with_controller(mut self, kind: ControllerKind) -> Self {
        self.controllers = PerChannel::splat(kind);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn rule_base(&self) -> Result<RuleBase> {
        RuleBase::try_from(self.rule_base.clone())
    }

    pub fn steps(&self) -> usize {
        (self.run.duration / self.run.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if !(r.dt.is_finite() && r.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", r.dt)));
        }
        if !(r.duration.is_finite() && r.duration >= r.dt) {
            return Err(Error::Config(format!("duration must be >= dt, got {}", r.duration)));
        }
        if !(r.qtable_interval.is_finite() && r.qtable_interval >= 0.0) {
            return Err(Error::Config("qtable_interval must be >= 0".into()));
        }
        for ch in Channel::ALL {
            self.references.get(ch).validate()?;
            self.pid.get(ch).validate()?;
            self.sni.get(ch).validate()?;
        }
        self.fql.hyper_params(r.seed).validate()?;
        self.bounds.validate()?;
        self.plant.validate()?;
        let rules = self.rule_base()?;
        if self.expert.gamma.len() != rules.len() || self.expert.tau.len() != rules.len() {
            return Err(Error::Config("expert table needs one consequent per rule".into()));
        }
        if self.actions.gamma.is_empty() || self.actions.tau.is_empty() {
            return Err(Error::Config("action sets must be non-empty".into()));
        }
        if let Some(b) = &self.bias {
            b.validate()?;
        }
        if let Some(d) = &self.dryden {
            d.validate()?;
        }
        for g in &self.gust {
            g.validate()?;
        }
        if !self.wind.kappa.is_finite() || !self.wind.drag.iter().all(|c| c.is_finite() && *c >= 0.0) {
            return Err(Error::Config("wind kappa must be finite and drag >= 0".into()));
        }
        if let Some(l) = &self.limits {
            if ![l.thrust, l.roll_moment, l.pitch_moment, l.yaw_moment].iter().all(|v| *v > 0.0) {
                return Err(Error::Config("actuator limits must be > 0".into()));
            }
        }
        Ok(())
    }
}
