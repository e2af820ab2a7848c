use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid dyadic index: order {order}, shift {shift}")]
    InvalidIndex { order: u32, shift: u64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("order {requested} out of range (max {max})")]
    OrderOutOfRange { requested: u32, max: u32 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("non-uniform sample spacing at line {line}")]
    Spacing { line: usize },

    #[error("echo window out of bounds: {0}")]
    Bounds(String),

    #[error("phase wrap: {reason}{}", .location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    PhaseWrap {
        reason: String,
        location: Option<String>,
    },

    #[error("degenerate readout references: {0}")]
    DegenerateReference(String),

    #[error("infeasible packing: {0}")]
    Packing(String),

    #[error("fit did not converge (residual {residual:e})")]
    FitFailed { residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach the measurement location to a phase-wrap error.
    pub fn at(self, location: impl Into<String>) -> Self {
        match self {
            Error::PhaseWrap { reason, .. } => Error::PhaseWrap {
                reason,
                location: Some(location.into()),
            },
            other => other,
        }
    }
}
