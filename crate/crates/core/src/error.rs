use thiserror::Error;

/// Errors raised by the analysis, simulation and tuning routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pole on evaluation frequency {omega} rad/s")]
    PoleOnAxis { omega: f64 },

    #[error("reset describing function undefined at {omega} rad/s: {reason}")]
    DescribingFunctionUndefined { omega: f64, reason: &'static str },

    #[error("singular sensitivity at {omega} rad/s (open loop equals -1)")]
    SingularSensitivity { omega: f64 },

    #[error("no gain crossover in [{lo}, {hi}] rad/s")]
    NoCrossover { lo: f64, hi: f64 },

    #[error("multiple gain crossovers; candidate brackets (rad/s): {brackets:?}")]
    MultipleCrossovers { brackets: Vec<(f64, f64)> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("simulation diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error("algebraic loop: plant has direct feedthrough and no input delay")]
    AlgebraicLoop,

    #[error("infinite SNR: noise level is zero")]
    InfiniteSnr,

    #[error("linear algebra failure: {0}")]
    Linalg(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
