use std::path::PathBuf;

/// Errors produced by the solver, the diagnostics and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular derivative: {0}")]
    Singular(String),

    #[error("degenerate film height {value} at cell {index}")]
    Degenerate { index: usize, value: f64 },

    #[error("grid has {n} cells, at least {min} required")]
    Size { n: usize, min: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite state after last good time t = {t}")]
    NonFinite { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("undefined quotient: {0}")]
    UndefinedQuotient(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::NonFinite { .. } | Error::Oracle(_) | Error::Degenerate { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
