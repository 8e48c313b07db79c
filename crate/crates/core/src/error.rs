use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the object is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "shooting failed after {iterations} bisection steps, final bracket [{lo}, {hi}]: {reason}"
    )]
    Shooting {
        lo: f64,
        hi: f64,
        iterations: usize,
        reason: String,
    },

    #[error("insufficient tail samples: profile must extend to r >= {required_r_max:.3}")]
    InsufficientTail { required_r_max: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("center {center} lies outside the safe box; half width must be at least {required_half_width:.3}")]
    Truncation {
        center: usize,
        required_half_width: f64,
    },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("saddle system is singular or ill-conditioned (condition estimate {condition_estimate:.3e})")]
    Singular { condition_estimate: f64 },

    #[error("eigensolver did not converge, worst residual {worst_residual:.3e}")]
    EigenNonConvergence {
        worst_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("fixed-point iteration is not contracting ({reason}); update history {history:?}")]
    Contraction { reason: String, history: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
