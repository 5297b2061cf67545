use std::path::PathBuf;

/// All failures surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("coordinate {coord} lies outside the computational domain (|x| <= {limit})")]
    OutOfDomain { coord: f64, limit: f64 },

    #[error("linear solve did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("geometry escapes the physical region at t = {t}: {detail}")]
    GeometryEscape { t: f64, detail: String },

    #[error("unsupported motion: {0}")]
    UnsupportedMotion(String),

    #[error("format error in {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::OutOfDomain { .. } => 2,
            Error::SolverDivergence { .. } => 3,
            Error::GeometryEscape { .. } | Error::UnsupportedMotion(_) => 4,
            Error::Format { .. } | Error::Io { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format { path: path.into(), detail: detail.into() }
    }
}
