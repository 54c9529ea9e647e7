use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration or geometry.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input signal unusable for the requested operation.
    #[error("input error: {0}")]
    Input(String),

    /// Sparse code inconsistent with the dictionary it is applied to.
    #[error("code error: {0}")]
    Code(String),

    #[error("synthesis error: {0}")]
    Synthesis(String),

    #[error("solver diverged at iteration {iteration}: {message}")]
    Solver { iteration: usize, message: String },

    #[error("gradient error: {0}")]
    Gradient(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    /// Mismatched collaborators (trace, dictionary, signal).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("cannot ingest {}: {message}", path.display())]
    Ingestion { path: PathBuf, message: String },

    #[error("sample rate mismatch in {}: expected {expected} Hz, found {found} Hz", path.display())]
    RateMismatch {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("missing corpus files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingFiles(Vec<PathBuf>),

    #[error("utterance {id}: {source}")]
    Utterance {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn in_utterance(self, id: &str) -> Self {
        Error::Utterance {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::Code(_) => "code",
            Error::Synthesis(_) => "synthesis",
            Error::Solver { .. } => "solver",
            Error::Gradient(_) => "gradient",
            Error::Optimizer(_) => "optimizer",
            Error::Contract(_) => "contract",
            Error::Ingestion { .. } => "ingestion",
            Error::RateMismatch { .. } => "rate_mismatch",
            Error::MissingFiles(_) => "missing_files",
            Error::Utterance { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// True for errors caused by bad user-supplied configuration (exit code 2).
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Utterance { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
