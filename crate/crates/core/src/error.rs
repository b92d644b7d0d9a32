use thiserror::Error;

/// Error type shared by all library modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Structural misuse: incompatible shapes, bad layer wiring, invalid modes.
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad runtime input: empty meshes, out-of-range labels, too few points.
    #[error("input error: {0}")]
    Input(String),

    /// Non-finite values or diverging numerics. Always a hard error.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed file contents. Carries a 1-based line number when known.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }
    pub fn input(msg: impl Into<String>) -> Self {
        CoreError::Input(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        CoreError::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
