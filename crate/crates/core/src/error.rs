use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter {index} = {value} lies outside [-1/2, 1/2]")]
    ParameterOutOfRange { index: usize, value: f64 },

    #[error("coefficient bound violated: {0}")]
    BoundViolation(String),

    #[error("stiffness matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e}, diagonal ratio {diag_ratio:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        diag_ratio: f64,
    },

    #[error("evaluation at point {index} failed: {source}")]
    PointFailure {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation at rule point ({j}, {k}) failed: {source}")]
    TensorPointFailure {
        j: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("polynomial {0} is reducible")]
    Reducible(String),

    #[error("{path}:{line}: invalid {field}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("reference cache entry {path} is corrupt: {message}")]
    CacheCorrupt { path: PathBuf, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
