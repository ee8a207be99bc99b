//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used by every fallible function in the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building models, simulating paths,
/// decomposing them, or running the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Two sequences that must share a grid have different lengths.
    #[error("shape mismatch: {context}: {left} vs {right}")]
    ShapeMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// Inverting a stochastic exponential hit a vanishing factor.
    #[error("step {step}: \u{3b2} \u{394}K = 1 jump not excised")]
    ZeroFactor { step: usize },

    /// A model or run parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A user-supplied evaluator produced a NaN.
    #[error("evaluator returned NaN at step {step} (state {state})")]
    NanEvaluator { step: usize, state: f64 },

    /// Every replication of a Monte Carlo study diverged, so no moment
    /// estimate is possible.
    #[error("all {count} replications diverged; nothing to summarize")]
    AllReplicationsDivergent { count: usize },

    /// The INI config could not be parsed.
    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// A config value parsed but is unusable for the requested run.
    #[error("config: {0}")]
    ConfigInvalid(String),

    /// Filesystem trouble while reading configs or writing outputs.
    #[error("io: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a human-readable context to an io error.
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
