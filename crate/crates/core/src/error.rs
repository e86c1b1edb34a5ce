use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An event cannot be applied to the state reached by replaying its predecessors.
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A solver failed to converge or hit a degenerate configuration.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Estimation was asked for a component whose denominator is zero while
    /// its numerator is not.
    #[error("estimation failure for {component}: {reason}")]
    Estimation { component: String, reason: String },

    /// An exposed individual has no possible infection source in the augmented data.
    #[error("individual {individual} exposed at {time} has no possible infectious source")]
    Incompatible { individual: usize, time: f64 },

    #[error("rejection sampler for individual {individual} exhausted {attempts} proposals")]
    SamplerExhausted { individual: usize, attempts: usize },

    #[error("stochastic EM aborted at iteration {iteration}: {reason}")]
    StemAborted { iteration: usize, reason: String },
}

impl Error {
    /// Whether the failure is a numerical one, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_)
                | Error::Estimation { .. }
                | Error::Incompatible { .. }
                | Error::SamplerExhausted { .. }
                | Error::StemAborted { .. }
        )
    }
}
