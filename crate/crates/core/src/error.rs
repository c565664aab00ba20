use thiserror::Error;

/// Errors surfaced by the flow-metering engine.
#[derive(Debug, Error)]
pub enum VfmError {
    /// Shapes or lengths that do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A numerical input that must be finite was not.
    #[error("non-finite input in {0}")]
    NonFiniteInput(&'static str),

    /// A computation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training diverged. Carries the state at the point of failure.
    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid data (bad records, degenerate splits, zero values where a ratio is taken).
    #[error("data error: {0}")]
    Data(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl VfmError {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        VfmError::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        VfmError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the caller's configuration rather than the data or numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, VfmError::Config(_))
    }

    /// True for errors raised by a numerical failure (divergence or non-finite values).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            VfmError::Numerical(_) | VfmError::Divergence { .. } | VfmError::NonFiniteInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, VfmError>;
