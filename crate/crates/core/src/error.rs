use num_complex::Complex64;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("disc of radius {radius} centered at {center} escapes the domain")]
    DiscOutsideDomain { center: Complex64, radius: f64 },

    #[error("disc of radius {radius} contains only {count} samples")]
    EmptyDisc { radius: f64, count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field format error: {0}")]
    Format(String),

    #[error("unsupported field format version {0:#04x}")]
    UnsupportedVersion(u8),

    #[error("field dtype mismatch: expected {expected}, found {found}")]
    DtypeMismatch { expected: u8, found: u8 },

    #[error("exponential range exceeded: ||omega||_inf = {0}")]
    OmegaOverflow(f64),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("neumann iteration exceeded {max_iter} steps (last increment {last_increment:e})")]
    NeumannMaxIter {
        max_iter: usize,
        last_increment: f64,
    },

    #[error("curl residual {residual:e} exceeds tolerance {tolerance:e}: input is not a solution")]
    CurlResidual { residual: f64, tolerance: f64 },

    #[error("masked fraction {fraction} exceeds the certificate limit {limit}")]
    MaskedFraction { fraction: f64, limit: f64 },

    #[error("normalization unmet: {0}")]
    Normalization(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
