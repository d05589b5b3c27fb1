use thiserror::Error;

#[derive(Debug, Error)]
pub enum WtError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("operation requires a {expected} system, got {found}")]
    OrderMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("{system} system does not provide {what}")]
    Unsupported { system: String, what: &'static str },

    #[error("length mismatch for {what}: expected {expected}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("integration blew up at t = {time}: mode {mode} is not finite")]
    BlowUp { time: f64, mode: usize },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("negative value {value} at index {index} (tolerance {tolerance})")]
    Negativity {
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("positivity violated: flux {flux} outside the admissible range [{lower}, {upper}]")]
    Positivity { flux: f64, lower: f64, upper: f64 },

    #[error("resonance entry references mode {mode}, outside the {count} participating modes")]
    ModeOutOfSet { mode: usize, count: usize },

    #[error("tensor grid of {cells} cells exceeds the budget of {budget}")]
    MemoryBudget { cells: usize, budget: usize },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WtError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> WtError {
    WtError::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
