use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("graph generation failed: {0}")]
    Generation(String),

    #[error("network is not connected")]
    Disconnected,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("estimator domain: {0}")]
    EstimatorDomain(String),

    #[error("protocol violation at round {round}: {msg}")]
    Protocol { round: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
