use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, dimensions or counts that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// A quantity that should be real or in range came out otherwise.
    #[error("numeric integrity error: {0}")]
    NumericIntegrity(String),

    /// Vectors too close to linear dependence to orthonormalize.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid Bloch vector: norm {0} exceeds 1")]
    InvalidBloch(f64),

    /// The request is outside what the routine supports.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("unknown registry entry `{0}`")]
    UnknownEntry(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that indicate corrupted numerics rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericIntegrity(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
