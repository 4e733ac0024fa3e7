use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integration diverged: non-finite state at step {step}")]
    IntegrationDivergence { step: usize },

    #[error("degenerate scale: component {component} has zero spread")]
    DegenerateScale { component: usize },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid time series: {0}")]
    TimeSeries(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("encoding error: expected input of dimension {expected}, got {got}")]
    Encoding { expected: usize, got: usize },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("hamiltonian assembly error: {0}")]
    Assembly(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("circuit error: {0}")]
    Circuit(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("reservoir diverged: non-finite state at step {step}")]
    ReservoirDivergence { step: usize },

    #[error("training error: {0}")]
    Training(String),

    #[error("normal matrix is rank deficient at eta = 0; use a positive regularization")]
    RankDeficient,

    #[error("metric error: {0}")]
    Metric(String),

    #[error("missing inputs in {dir}: expected {expected}")]
    MissingInputs { dir: PathBuf, expected: String },

    #[error("plot error: {0}")]
    Plot(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
