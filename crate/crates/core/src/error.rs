//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// One entry per violated configuration bound.
    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    /// The conditioning event "a packet has just been inserted" has
    /// probability zero when no packets are ever generated.
    #[error("λ > 0 required for conditional distribution")]
    LambdaZero,

    /// Block dimensions do not match the requested assembly.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A linear system that should be regular for every valid config
    /// turned out numerically singular.
    #[error("singular linear system: {0}")]
    Singular(String),

    /// (I - T) solve produced a residual too large to trust.
    #[error("near-singular system, residual {residual:e}")]
    NearSingular { residual: f64 },

    /// The phase-type tail did not drop below threshold before the horizon cap.
    #[error("adaptive horizon exceeded cap of {cap} slots (tail mass {tail:e})")]
    HorizonExceeded { cap: u64, tail: f64 },

    /// PMF is only defined on u >= 1.
    #[error("pmf support starts at u = 1, got u = {0}")]
    PmfSupport(u64),

    /// Quantile requires 0 <= p < 1.
    #[error("quantile probability must satisfy 0 ≤ p < 1, got {0}")]
    QuantileRange(f64),

    /// A simulation produced no post-warmup delay samples.
    #[error("no samples")]
    NoSamples,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
