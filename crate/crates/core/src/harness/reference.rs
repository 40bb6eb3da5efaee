use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    Sine,
    Square,
    Step,
    ConstantAfterDelay,
}

/// Reference signal of one channel.
///
/// Before `start` every kind holds `offset`. `ConstantAfterDelay` then jumps to
/// `amplitude` itself; `Step` jumps to `offset + amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceProfile {
    pub kind: ReferenceKind,
    pub amplitude: f64,
    #[serde(default)]
    pub period: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub start: f64,
}

impl ReferenceProfile {
    pub fn zero() -> Self {
        Self {
            kind: ReferenceKind::Step,
            amplitude: 0.0,
            period: 0.0,
            offset: 0.0,
            start: 0.0,
        }
    }

    pub fn sine(amplitude: f64, period: f64) -> Self {
        Self {
            kind: ReferenceKind::Sine,
            amplitude,
            period,
            offset: 0.0,
            start: 0.0,
        }
    }

    pub fn square(amplitude: f64, period: f64) -> Self {
        Self {
            kind: ReferenceKind::Square,
            ..Self::sine(amplitude, period)
        }
    }

    pub fn step(amplitude: f64, start: f64) -> Self {
        Self {
            kind: ReferenceKind::Step,
            amplitude,
            period: 0.0,
            offset: 0.0,
            start,
        }
    }

    pub fn constant_after_delay(value: f64, start: f64) -> Self {
        Self {
            kind: ReferenceKind::ConstantAfterDelay,
            ..Self::step(value, start)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let periodic = matches!(self.kind, ReferenceKind::Sine | ReferenceKind::Square);
        if periodic && !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Config(format!("periodic reference needs period > 0, got {}", self.period)));
        }
        if ![self.amplitude, self.offset, self.start].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("reference fields must be finite".into()));
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> f64 {
        if t < self.start {
            return self.offset;
        }
        let s = t - self.start;
        match self.kind {
            ReferenceKind::Sine => self.offset + self.amplitude * (2.0 * PI * s / self.period).sin(),
            ReferenceKind::Square => {
                let phase = (s / self.period).fract();
                let sign = if phase < 0.5 { 1.0 } else { -1.0 };
                self.offset + self.amplitude * sign
            }
            ReferenceKind::Step => self.offset + self.amplitude,
            ReferenceKind::ConstantAfterDelay => self.amplitude,
        }
    }

    /// Sample window `[from, to)` of the first settling segment and the size of its change.
    pub fn first_segment(&self, duration: f64) -> (f64, f64, f64) {
        match self.kind {
            ReferenceKind::Square => (0.0, (self.start + 0.5 * self.period).min(duration), self.amplitude),
            ReferenceKind::ConstantAfterDelay => (0.0, duration, self.amplitude - self.offset),
            _ => (0.0, duration, self.amplitude),
        }
    }
}
