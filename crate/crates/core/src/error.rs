use std::path::PathBuf;

use crate::fanout::FanoutDesign;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch in {context}: {left} vs {right}")]
    GridMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode out of range: {0}")]
    ModeOutOfRange(String),

    #[error("envelope does not fit the grid: {0}")]
    EnvelopeTooLarge(String),

    #[error("fan-out period {period:.4e} m is not resolvable on pitch {pitch:.4e} m (needs > 2 samples per period)")]
    UnresolvablePeriod { period: f64, pitch: f64 },

    #[error("{what} exceed the grid: {reason}")]
    ExceedsGrid { what: &'static str, reason: String },

    #[error("fan-out optimization reached efficiency {efficiency:.4} (uniformity error {uniformity:.4}), below the 0.90 floor")]
    OptimizationFailed {
        efficiency: f64,
        uniformity: f64,
        best: Box<FanoutDesign>,
    },

    #[error("no in-bin power for sent mode {mode}")]
    DegenerateColumn { mode: String },

    #[error("inconsistent stage chain: {0}")]
    Chain(String),

    #[error("config: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Config(Vec<ConfigDiagnostic>),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
}

/// One violated key in a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDiagnostic {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
