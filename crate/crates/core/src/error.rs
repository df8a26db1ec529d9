use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// Every variant that corresponds to a size or precondition guard names the
/// guard so the CLI can report it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size guard `{guard}` exceeded: {value} > {limit}")]
    SizeGuard {
        guard: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("bitstring {0} is not in any Hamming class X_m")]
    NotInHammingClass(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("duplicate sample node t = {0}")]
    DuplicateNode(f64),

    #[error("sample nodes do not match the requested window: {0}")]
    WindowMismatch(String),

    #[error("polynomial recovery failed: {0}")]
    RecoveryFailed(String),

    #[error("zero second moment")]
    ZeroSecondMoment,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Name of the violated guard, when the error is a guard violation.
    pub fn guard_name(&self) -> Option<&'static str> {
        match self {
            Error::SizeGuard { guard, .. } => Some(guard),
            Error::NonConvergence { method, .. } => Some(method),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
