use std::path::PathBuf;

use thiserror::Error;

use crate::optimizer::OptimizationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid functional parameters: {0}")]
    InvalidParams(String),

    #[error("invalid detector model: {0}")]
    InvalidDetector(String),

    #[error("invalid optimizer configuration: {0}")]
    InvalidOptimizer(String),

    #[error("grid error: {0}")]
    Grid(String),

    /// Total coefficient norm vanished at a grid node.
    #[error("coefficient norm vanishes at grid node {node}")]
    ZeroNorm { node: usize },

    #[error("degenerate amplitudes: {0}")]
    Degenerate(String),

    /// The descent ran out of iterations without collapsing. The best
    /// trajectory found is carried along.
    #[error("optimizer did not converge after {} iterations", .0.iterations)]
    NonConvergence(Box<OptimizationReport>),

    #[error("requested {what} of {requested} nodes exceeds the budget of {budget}")]
    Resource {
        what: &'static str,
        requested: usize,
        budget: usize,
    },

    #[error("configurations are not comparable: {0}")]
    ConfigMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration or files rather
    /// than by the physics under test.
    pub fn is_usage_error(&self) -> bool {
        !matches!(self, Error::NonConvergence(_))
    }
}
