use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitianInput { residual: f64 },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitaryInput { residual: f64 },
    #[error("phi vector does not sum to zero (sum {sum:.3e})")]
    NonZeroSum { sum: f64 },
    #[error("Hamiltonian has a non-negligible local part (norm {norm:.3e}); strip it with nonlocal_part first")]
    NonNegligibleLocalPart { norm: f64 },
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("vector is not majorized by the reference vector")]
    NotMajorized,
    #[error("matrix is not doubly stochastic (residual {residual:.3e})")]
    NotDoublyStochastic { residual: f64 },
    #[error("no permutation supported on the positive entries was found")]
    NoMatchingFound,
    #[error("time {t} lies outside the profile domain [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("adaptive quadrature did not reach tolerance {tol:.3e} (estimate {estimate:.3e})")]
    QuadratureFailure { tol: f64, estimate: f64 },
    #[error("bad range: t1 = {t1} must exceed t0 = {t0}")]
    BadRange { t0: f64, t1: f64 },
    #[error("target is not reachable within T = {t}")]
    NotReachable { t: f64 },
    #[error("target not reachable within the search horizon {horizon}")]
    HorizonExceeded { horizon: f64 },
    #[error("propagation step too large: local error estimate {estimate:.3e} exceeds {tol:.3e}")]
    StepTooLarge { estimate: f64, tol: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input, as opposed
    /// to numerical failures inside a solver.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonHermitianInput { .. }
                | Error::NonUnitaryInput { .. }
                | Error::NonZeroSum { .. }
                | Error::NonNegligibleLocalPart { .. }
                | Error::LengthMismatch(..)
                | Error::NotMajorized
                | Error::NotDoublyStochastic { .. }
                | Error::OutOfRange { .. }
                | Error::BadRange { .. }
                | Error::NotReachable { .. }
                | Error::InvalidInput(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
