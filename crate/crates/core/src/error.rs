use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported matrix dimension {0} (expected 2 or 4)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: ‖m − m†‖_max = {defect:e} exceeds {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is not diagonal")]
    NotDiagonal,

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    EigenNotConverged(usize),

    #[error("kinetic operator not positive-definite")]
    KineticNotPositive,

    #[error("degenerate model: Ω and ε are both zero")]
    DegenerateModel,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("state is not an X-state (off-X entry {0:e}); use concurrence_wootters")]
    NotXState(f64),

    #[error("time step {dt:e} exceeds the stability bound {max_dt:e}; try dt = {suggested:e}")]
    StepTooLarge { dt: f64, max_dt: f64, suggested: f64 },

    #[error("invariant violated at step {step} (t = {t:e}): {detail}")]
    InvariantViolation { step: usize, t: f64, detail: String },

    #[error("trajectory norm drifted by {0:e}")]
    NormDrift(f64),
}
