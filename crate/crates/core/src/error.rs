use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` at byte {offset} takes 1 argument, got {got}")]
    Arity {
        name: String,
        offset: usize,
        got: usize,
    },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("malformed scenario: {0}")]
    MalformedScenario(String),

    #[error("missing required coefficient `{0}`")]
    MissingCoefficient(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("tolerance not achieved: {0}")]
    Tolerance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} violated, max residual {residual:.3e}")]
    Consistency { what: String, residual: f64 },

    #[error("nonlinearity mismatch: worst relative deviation {deviation:.3e} at t = {t}")]
    NonlinearityMismatch { deviation: f64, t: f64 },

    #[error("seed/target mismatch: {0}")]
    TargetMismatch(String),

    #[error("singularity: {0}")]
    Singular(String),

    #[error("bracket not found: {0}")]
    Bracket(String),

    #[error("domain exhausted: {0}")]
    Domain(String),

    #[error("boundary mass too large: {ratio:.3e} of the peak")]
    BoundaryMass { ratio: f64 },

    #[error("scheme mismatch: {0}")]
    Scheme(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
