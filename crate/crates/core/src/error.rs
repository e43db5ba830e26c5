use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("the domain of the function is empty")]
    EmptyDomain,

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("vector is not a subgradient at the given point")]
    NotASubgradient,

    #[error("not a stationary point: no multiplier satisfies the KKT system")]
    NotStationary,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{found} active indices exceed the enumeration cap of {cap}")]
    SizeCap { found: usize, cap: usize },

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Coarse classification used for process exit codes and C error codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidInput,
    Precondition,
    Internal,
}

impl Error {
    pub fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DimensionMismatch { .. } | Error::InvalidInput(_) | Error::EmptyDomain => {
                ErrorClass::InvalidInput
            }
            Error::OutsideDomain
            | Error::NotASubgradient
            | Error::NotStationary
            | Error::Precondition(_)
            | Error::SizeCap { .. } => ErrorClass::Precondition,
            Error::Internal(_) => ErrorClass::Internal,
        }
    }
}

pub(crate) fn check_dim(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::dims(context, expected, found))
    }
}
