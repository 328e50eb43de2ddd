use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
    #[error("{0}")]
    Core(#[from] lago_core::Error),
    #[error("{stage} failed: {source}")]
    Solver {
        stage: String,
        #[source]
        source: lago_core::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// Wraps a core error raised while running `stage`. Errors that describe
    /// bad input stay data errors.
    pub fn in_stage(stage: impl Into<String>, source: lago_core::Error) -> Self {
        use lago_core::Error as E;
        match source {
            E::RankDeficient
            | E::IndefiniteSystem { .. }
            | E::NonFinite { .. }
            | E::Diverged { .. }
            | E::NoConvergence(_) => Error::Solver {
                stage: stage.into(),
                source,
            },
            other => Error::Core(other),
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Format { .. } | Error::Core(_) => 2,
            Error::Solver { .. } => 3,
        }
    }
}
