use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot place {edges} simple edges on {nodes} nodes")]
    TooManyEdges { edges: u64, nodes: usize },

    #[error("population graph has no nodes")]
    EmptyGraph,

    #[error("statistic `{0}` is constant across runs")]
    ConstantStatistic(String),

    #[error("statistic `{0}` is missing")]
    MissingStatistic(String),

    #[error("observed `{name}` = {value} lies outside the simulated support [{lo}, {hi}]")]
    ObservedOutOfSupport {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("not enough simulations: {0}")]
    TooFewRuns(String),

    #[error("no cases exist at step {0} but citations must be assigned")]
    NoCases(usize),

    #[error("every simulation weight underflowed to zero")]
    WeightsUnderflow,

    #[error("{failed} of {total} runs failed")]
    RoundFailed { failed: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
