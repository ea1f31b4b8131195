use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheegerError {
    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate rasterization: no cell center within radius {radius}")]
    DegenerateRasterization { radius: f64 },

    #[error("oracle cap exceeded: {cells} cells > cap {cap}")]
    OracleCap { cells: usize, cap: usize },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid anisotropy: {0}")]
    InvalidAnisotropy(String),

    #[error("set is not contained in its parent")]
    NotSubset,

    #[error("alpha out of [1, 1*): alpha = {alpha}, 1* = {upper}")]
    AlphaOutOfRange { alpha: f64, upper: f64 },

    #[error("empty domain")]
    EmptyDomain,

    #[error("domain is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("comparability violated at cell {cell}, direction {direction}: ratio {ratio} outside [1/C, C] with C = {bound}")]
    Comparability { cell: usize, direction: usize, ratio: f64, bound: f64 },

    #[error("{check} violated: value {ratio} against threshold {threshold}")]
    InequalityViolation {
        check: &'static str,
        ratio: f64,
        threshold: f64,
        /// Cell indices of the offending set, or the offending radius for growth checks.
        witness: Vec<usize>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for CheegerError {
    fn from(e: std::io::Error) -> Self {
        CheegerError::Io(e.to_string())
    }
}

pub type Result<T, E = CheegerError> = std::result::Result<T, E>;
