use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate weighting: H is singular")]
    DegenerateWeighting,

    #[error("task singularity: smallest singular value {smallest:.3e} vs largest {largest:.3e}")]
    TaskSingularity { smallest: f64, largest: f64 },

    #[error("singular task; damping inactive")]
    SingularTask,

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("{locator}: {message}")]
    Config { locator: String, message: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run aborted at t = {t:.4} s: {source}")]
    RunAborted {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(locator: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            locator: locator.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors coming from reading or decoding files rather than from
    /// the content being physically or semantically invalid.
    pub fn is_io_or_parse(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
