use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no trade: every export value is zero")]
    NoTrade,

    #[error("{0}; prune empty rows/columns before calling")]
    NeedsPruning(String),

    #[error("bipartite graph has {0} disconnected components; compute per component")]
    Disconnected(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank deficient design matrix; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("perfect separation detected: {0}")]
    Separation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical routines rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::Separation(_) | Error::Disconnected(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
