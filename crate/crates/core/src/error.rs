use thiserror::Error;

/// Errors raised by the simulator, controllers and scenario harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An input was outside the domain of the operation (non-finite, non-positive, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Feedback linearization undefined because `cos(roll) * cos(pitch)` is too small.
    #[error("feedback linearization singular: |cos(roll)*cos(pitch)| = {cos_product:e}")]
    Singularity { cos_product: f64 },
    /// The plant left the region where the linearizing law is valid.
    #[error("simulation diverged at t = {time:.3} s: {reason}")]
    Diverged { time: f64, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Weighted average requested with zero total weight.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
