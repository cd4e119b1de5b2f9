use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("ill-conditioned {what}: condition number {cond:.3e}")]
    IllConditioned { what: &'static str, cond: f64 },
    #[error("covariance is not pure: det(2 sigma) = {det:.6e}")]
    Impure { det: f64 },
    #[error("degenerate angles: sin(theta_j - theta_k) = {sin:.3e}")]
    DegenerateAngles { sin: f64 },
    #[error("singular homodyne angle {theta} (cot undefined)")]
    SingularAngle { theta: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mode {0} is not live")]
    MissingMode(String),
    #[error("lattice exhausted: {0}")]
    LatticeExhausted(String),
    #[error("no decomposition found (best residual {residual:.3e})")]
    Unsatisfiable { residual: f64 },
    #[error("state invalid: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 3 for dimension and lattice-size errors, 2 for
    /// every other input error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension { .. } | Error::LatticeExhausted(_) => 3,
            _ => 2,
        }
    }
}
