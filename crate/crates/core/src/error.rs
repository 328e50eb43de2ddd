use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("invalid distance matrix: {0}")]
    InvalidDistance(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),
    #[error("normal equations are rank deficient; use lambda > 0")]
    RankDeficient,
    #[error("system matrix for node {node} is not positive definite (lambda = 0 on an isolated rank-deficient node?)")]
    IndefiniteSystem { node: usize },
    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("iterates diverged at iteration {iteration}; try a smaller learning rate")]
    Diverged { iteration: usize },
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error("unknown noise mechanism `{0}`")]
    UnknownMechanism(String),
    #[error("penalty continuation did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
