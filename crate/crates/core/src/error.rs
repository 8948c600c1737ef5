use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ω = {omega} outside the existence window: ω must satisfy {bound}")]
    OmegaOutsideWindow { omega: f64, bound: String },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("operation requires {expected}, got {found}")]
    RegimeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("length mismatch: expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("profile invariant violated: {0}")]
    ProfileInvariant(String),

    #[error("k = {k} is not a root of ω + αk²ln(k²/β) (residual {residual:e})")]
    NotARoot { k: f64, residual: f64 },

    #[error("constraint projection degenerate: beam power collapsed to {power:e}")]
    ConstraintDegenerate { power: f64 },

    #[error("shooting trajectory blew up at r = {radius}")]
    BlowUp { radius: f64 },

    #[error("step size underflow at r = {radius}")]
    StepUnderflow { radius: f64 },

    #[error("no shooting bracket found within {doublings} doublings")]
    NoBracket { doublings: usize },

    #[error("decay fit window is empty; increase R (currently {r_max})")]
    EmptyFitWindow { r_max: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
