use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {w:?} lies outside the parameter box of `{model}`")]
    OutsideBox { model: &'static str, w: Vec<f64> },

    #[error("expected a {expected}-dimensional {what}, got dimension {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("no grid point satisfies 0 < D(p0||p_w) <= {eps}")]
    EmptyGrid { eps: f64 },

    #[error("theory constant `{0}` is unknown for this model")]
    MissingConstant(&'static str),

    #[error("Fisher matrix J is singular: smallest eigenvalue {min_eigenvalue:e} < 1e-6")]
    SingularJ { min_eigenvalue: f64 },

    #[error(
        "sampler did not mix: min ESS {min_ess:.1} (need >= 100), max split R-hat {max_rhat:.4} (need <= 1.1)"
    )]
    NonMixing { min_ess: f64, max_rhat: f64 },

    #[error("replication n={n} r={replication}: {source}")]
    Replication {
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("observable offsets change sign across the n grid; pick an observable with a constant-sign offset")]
    SignChange,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// True for mixing failures, including ones wrapped with replication context.
    pub fn is_non_mixing(&self) -> bool {
        match self {
            Error::NonMixing { .. } => true,
            Error::Replication { source, .. } => source.is_non_mixing(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
