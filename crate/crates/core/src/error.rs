use alloc::string::String;
use core::fmt;

/// Failure modes shared across the engine.
///
/// [`Error::kind`] splits them into precondition failures (bad input) and
/// numerical ambiguities (a decision sat too close to the tolerance).
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    InvalidGroup(String),
    Precondition(String),
    NotNormalized { trace: f64 },
    NotPositive { min_eigenvalue: f64 },
    NotFaithful { sector: usize, min_eigenvalue: f64 },
    NotUnitary { residual: f64 },
    NotAnAction(String),
    UnknownCharacter(usize),
    SizeLimit { ambient: usize, limit: usize },
    Ambiguous(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Precondition,
    Ambiguity,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Ambiguous(_) => ErrorKind::Ambiguity,
            _ => ErrorKind::Precondition,
        }
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidGroup(msg) => write!(f, "invalid group: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::NotNormalized { trace } => write!(f, "state not normalized (trace {trace})"),
            Error::NotPositive { min_eigenvalue } => {
                write!(f, "operator not positive (min eigenvalue {min_eigenvalue:e})")
            }
            Error::NotFaithful { sector, min_eigenvalue } => write!(
                f,
                "state not faithful on sector {sector} (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::NotUnitary { residual } => write!(f, "operator not unitary (residual {residual:e})"),
            Error::NotAnAction(msg) => write!(f, "not a group action: {msg}"),
            Error::UnknownCharacter(idx) => write!(f, "character {idx} is not in the spectrum"),
            Error::SizeLimit { ambient, limit } => {
                write!(f, "ambient dimension {ambient} exceeds limit {limit}")
            }
            Error::Ambiguous(msg) => write!(f, "numerically ambiguous: {msg}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
