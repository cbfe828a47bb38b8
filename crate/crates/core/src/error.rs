use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("truncation n_trunc={n_trunc} too small: dropped mass {tail:.3e} exceeds tolerance {tol:.1e}")]
    TruncationTooSmall { n_trunc: usize, tail: f64, tol: f64 },

    #[error("non-finite amplitude at n={n}")]
    NonFiniteAmplitude { n: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("no solution: |gamma target| {target:.6} exceeds gamma_max {gamma_max:.6}")]
    NoSolution { target: f64, gamma_max: f64 },

    #[error("bias angle theta0={theta0:e} too close to the cot singularity")]
    ThetaNearSingular { theta0: f64 },

    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    QuadratureNotConverged {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("non-positive Fisher information {value:e} at grid index {index}")]
    NonPositiveFI { index: usize, value: f64 },

    #[error("Holstein-Primakoff violation: leaked weight {leaked:.3e} beyond n_trunc={n_trunc}")]
    HPViolation { leaked: f64, n_trunc: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
