use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A scenario field violates a structural invariant (dimension mismatch,
    /// non-positive rate, slice without any edge cloud, ...).
    InvalidScenario(String),
    /// Device, access point, edge cloud or slice index out of range.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    /// An offload decision targets an (edge cloud, slice) pair with zero
    /// capability, i.e. the edge cloud is not part of that slice.
    SliceAbsentEc { ec: usize, slice: usize },
    /// A weight or multiplier was requested for a resource the device
    /// cannot use.
    IncompatibleResource(String),
    /// A cost evaluation hit a zero provisioning coefficient on a resource
    /// that is actually used, which would make the completion time infinite.
    ZeroCoefficient(String),
    /// Exhaustive enumeration would exceed the instance-size guard.
    InstanceTooLarge { vectors: f64, limit: f64 },
    /// The improvement loop exceeded its iteration cap. With an exact
    /// potential this indicates a bug, not a property of the instance.
    IterationCapExceeded { cap: u64 },
    /// Generator parameters or an experiment configuration is unusable.
    InvalidConfig(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidScenario(msg) => write!(f, "invalid scenario: {msg}"),
            Error::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::SliceAbsentEc { ec, slice } => {
                write!(f, "edge cloud {ec} has no capability in slice {slice}")
            }
            Error::IncompatibleResource(msg) => write!(f, "incompatible resource: {msg}"),
            Error::ZeroCoefficient(msg) => {
                write!(f, "zero provisioning coefficient on a used resource: {msg}")
            }
            Error::InstanceTooLarge { vectors, limit } => write!(
                f,
                "instance too large for exhaustive search: {vectors:.3e} decision vectors (limit {limit:.1e})"
            ),
            Error::IterationCapExceeded { cap } => {
                write!(f, "improvement loop exceeded {cap} iterations")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
