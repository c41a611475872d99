use thiserror::Error;

/// Errors raised by model construction, channel simulation, schemes and bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value lies outside the parameter space or a required interval.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed call: wrong shapes, zero counts and the like.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Bernoulli score evaluated at a boundary parameter.
    #[error("score is singular at theta[{index}] = {value}")]
    SingularScore { index: usize, value: f64 },

    /// A capacity formula was asked for a noiseless channel.
    #[error("channel capacity is unbounded for noise variance 0")]
    InfiniteCapacity,

    /// Analog schemes need at least one channel use per coordinate.
    #[error("unsupported regime: s = {s} channel uses is fewer than d = {d}")]
    UnsupportedRegime { s: usize, d: usize },

    /// Degenerate construction (e.g. a zero encoder gain where it is inverted).
    #[error("degenerate: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
