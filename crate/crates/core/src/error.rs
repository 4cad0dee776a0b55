use num_complex::Complex64;
use thiserror::Error;

/// Every failure mode of the library.
///
/// Variants carry enough context to name the invariant that failed; the CLI
/// maps them onto exit codes through [`Error::is_validation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("model is not stable: root {root} of det P(z) has real part >= -1e-10")]
    Unstable { root: Complex64 },

    #[error("MA order q = {q} must be smaller than AR order p = {p}")]
    BadOrders { p: usize, q: usize },

    #[error("driving covariance is invalid: {0}")]
    BadCovariance(String),

    #[error("malformed model: {0}")]
    BadShape(String),

    #[error("root clusters {a} and {b} are closer than 10x the clustering tolerance {tol:e}")]
    RootClusterAmbiguous { a: Complex64, b: Complex64, tol: f64 },

    #[error("R(z) evaluated at z = {z}, within 1e-8 of a pole")]
    PoleEvaluation { z: Complex64 },

    #[error("omega = 0 is excluded for this evaluator")]
    OmegaZero,

    #[error("series outside its control region: delta*max|lambda| = {lhs:.6} >= |omega| = {omega:.6}")]
    SeriesDomain { lhs: f64, omega: f64 },

    #[error("series order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("reference summation needs {needed} terms, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("both roots of the eta quadratic for xi = {xi} lie on the unit circle")]
    UnitModulusEta { xi: Complex64 },

    #[error("order-pd Fourier coefficient does not vanish (relative size {ratio:e})")]
    DegreeReductionFailed { ratio: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPD(String),

    #[error("innovations recursion did not converge after {iterations} steps (last change {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("autocovariance generating polynomial has a root {root} on the unit circle")]
    RootOnCircle { root: Complex64 },

    #[error("Lyapunov solve residual {residual:e} exceeds tolerance")]
    LyapunovIllConditioned { residual: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eig:e}")]
    NotPSD { min_eig: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::BadOrders { .. }
                | Error::BadCovariance(_)
                | Error::BadShape(_)
                | Error::OmegaZero
                | Error::InvalidArgument(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
