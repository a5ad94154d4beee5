use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Failure categories shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KamError {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resonance at k={k:?}, l={l:?}: divisor {divisor:.3e} below threshold {threshold:.3e}")]
    Resonance {
        k: Vec<i32>,
        l: Vec<i32>,
        divisor: f64,
        threshold: f64,
    },

    #[error("solver failure: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("hypothesis {name} failed: lhs {lhs:.3e} vs rhs {rhs:.3e}")]
    Hypothesis { name: String, lhs: f64, rhs: f64 },

    #[error("equilibrium not found within radius {radius:.3e} (best residual {residual:.3e})")]
    EquilibriumNotFound { radius: f64, residual: f64 },

    #[error("perturbation too large: norm {norm:.3e} exceeds bound {bound:.3e}")]
    Smallness { norm: f64, bound: f64 },

    #[error("analyticity strip exhausted: s = {0:.3e}")]
    StripExhausted(f64),

    #[error("Lie series diverging after {0} terms")]
    LieDivergence(usize),

    #[error("boundary margin violated: |f| = {found:.3e} < {required:.3e}")]
    IllPosedBoundary { found: f64, required: f64 },

    #[error("unsupported dimension {0} for degree computation")]
    UnsupportedDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration blew up at t = {0}")]
    BlowUp(f64),
}

/// Coarse failure category, used for reporting and exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Resonance,
    Hypothesis,
    Equilibrium,
    Smallness,
    Other,
}

impl KamError {
    pub fn kind(&self) -> FailureKind {
        match self {
            KamError::Resonance { .. } => FailureKind::Resonance,
            KamError::Hypothesis { .. } => FailureKind::Hypothesis,
            KamError::EquilibriumNotFound { .. } => FailureKind::Equilibrium,
            KamError::Smallness { .. } => FailureKind::Smallness,
            _ => FailureKind::Other,
        }
    }
}

pub type Result<T> = std::result::Result<T, KamError>;
