//! Tracking-error metrics.

use crate::error::{Error, Result};

/// Number of trailing samples inspected by [`steady_offset`].
pub const STEADY_WINDOW: usize = 500;

pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Largest `|e|` over the final 500 samples.
pub fn steady_offset(errors: &[f64]) -> Result<f64> {
    if errors.len() <= STEADY_WINDOW {
        return Err(Error::Domain(format!(
            "steady offset needs more than {STEADY_WINDOW} samples, got {}",
            errors.len()
        )));
    }
    Ok(errors[errors.len() - STEADY_WINDOW..]
        .iter()
        .fold(0.0, |m, e| m.max(e.abs())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settle {
    /// Time from the start of the segment [s]; the whole segment length when never settled.
    pub time: f64,
    pub settled: bool,
}

/// First time from which `|e| <= band` holds through the end of the segment.
pub fn settle_time(errors: &[f64], band: f64, dt: f64) -> Settle {
    match errors.iter().rposition(|e| e.abs() > band) {
        None => Settle {
            time: 0.0,
            settled: true,
        },
        Some(last) if last + 1 == errors.len() => Settle {
            time: errors.len() as f64 * dt,
            settled: false,
        },
        Some(last) => Settle {
            time: (last + 1) as f64 * dt,
            settled: true,
        },
    }
}

/// Settling band for a reference change of `step_size`: 2 %, floored at 0.02.
pub fn default_band(step_size: f64) -> f64 {
    (0.02 * step_size.abs()).max(0.02)
}
