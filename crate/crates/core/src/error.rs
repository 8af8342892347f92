use thiserror::Error;

/// Errors raised by the core computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("operation requires {expected} boundary conditions")]
    WrongBoundary { expected: &'static str },
    #[error("momentum {0:?} is not an allowed mode")]
    NotAMode(Vec<f64>),
    #[error("zero-energy mode has an infinite Bose occupation")]
    ZeroMode,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("normalization hypothesis violated: <1-P> estimate {0:.6e} exceeds 1/2")]
    HypothesisViolated(f64),
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("matrix is not symmetric (max deviation {0:.3e})")]
    NotSymmetric(f64),
    #[error("density matrix has trace {0}, expected 1")]
    BadTrace(f64),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
