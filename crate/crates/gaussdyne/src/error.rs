use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by phase-space operations.
///
/// Structural problems (shapes, symmetry) and physics violations
/// (uncertainty relation, complete positivity, stability) are kept as
/// distinct variants so callers can report the violated invariant by name.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("phase-space dimension must be even, got {0}")]
    OddDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not antisymmetric (max deviation {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),

    #[error("uncertainty relation violated: min eigenvalue of sigma + i*Omega is {0:.3e}")]
    UncertaintyViolation(f64),

    #[error("matrix is not symplectic (max residual of S Omega S^T - Omega is {0:.3e})")]
    NotSymplectic(f64),

    #[error("channel violates complete positivity: min eigenvalue of Y + i(Omega - X Omega X^T) is {0:.3e}")]
    InvalidChannel(f64),

    #[error("bath covariance is unphysical: min eigenvalue of sigma_B + i*Omega is {0:.3e}")]
    UnphysicalBath(f64),

    #[error("drift/diffusion pair is inadmissible: min eigenvalue of D + i*Omega A_a Omega^T is {0:.3e}")]
    InadmissibleDrift(f64),

    #[error("singular or ill-conditioned matrix: {0}")]
    Singular(String),

    #[error(
        "drift matrix is not Hurwitz (max eigenvalue real part {0:.3e}); no steady state exists"
    )]
    Unstable(f64),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("steady state failed certification: Lyapunov min eigenvalue {lyapunov_min:.3e}, uncertainty min eigenvalue {uncertainty_min:.3e}")]
    CertificationFailed {
        lyapunov_min: f64,
        uncertainty_min: f64,
    },

    #[error("degenerate symplectic completion (pair product {0:.3e} below tolerance)")]
    DegenerateCompletion(f64),

    #[error("integration step rejected at t = {t:.6}: state validity violated (min eigenvalue {min_eig:.3e}); reduce dt")]
    StepRejected { t: f64, min_eig: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}
