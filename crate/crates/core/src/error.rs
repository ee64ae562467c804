use thiserror::Error;

/// Errors raised by the fnls library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("imaginary residue {residue:.3e} exceeds tolerance after inverse transform")]
    ImaginaryResidue { residue: f64 },

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("undefined barycenter: {0}")]
    UndefinedBarycenter(String),

    #[error("zero field")]
    ZeroField,

    #[error("bad magic")]
    BadMagic,

    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported field file version {0}")]
    UnsupportedVersion(u32),

    #[error("not converged after {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("fiber unbounded in window: {0}")]
    FiberUnbounded(String),

    #[error("step collapse at iteration {iteration} (tau {tau:.3e})")]
    StepCollapse { iteration: usize, tau: f64 },

    #[error("window violation: {0}")]
    WindowViolation(String),

    #[error("linking box: {0}")]
    LinkingBox(String),

    #[error("corruption: {0}")]
    Corruption(String),

    #[error("condition: {0}")]
    Condition(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
