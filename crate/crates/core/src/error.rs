use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("symbol is not Hermitian")]
    NotHermitian,

    #[error("symbol is singular at ({0}, {1})")]
    SingularPoint(f64, f64),

    #[error("non-positive diagonal constant coefficient {0}")]
    NonPositiveDiagonal(f64),

    #[error("dense size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("symbol has complex coefficients; a real operator was requested")]
    ComplexCoefficients,

    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),

    #[error("partial dimension {0} is too small")]
    TooSmall(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
