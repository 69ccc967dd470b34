use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("replication {rep} at n = {n} failed: {source}")]
    Replication {
        n: usize,
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Quadrature(_) | Error::Integrator(_) | Error::Invariant(_) => true,
            Error::Replication { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
