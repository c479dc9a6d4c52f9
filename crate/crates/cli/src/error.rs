use std::path::PathBuf;

use memhtm::HtmError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },

    #[error("{}:{line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: class folder has no images", path.display())]
    EmptyClass { path: PathBuf },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("{phase}: {source}")]
    Htm {
        phase: &'static str,
        #[source]
        source: HtmError,
    },

    #[error("unknown device preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_phase(phase: &'static str) -> impl FnOnce(HtmError) -> Self {
        move |source| Self::Htm { phase, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Image { .. } => "image",
            Self::Csv { .. } => "csv",
            Self::EmptyClass { .. } => "empty_class",
            Self::Dataset(_) => "dataset",
            Self::Htm { .. } => "simulation",
            Self::UnknownPreset(_) => "unknown_preset",
            Self::Sweep(_) => "sweep",
            Self::Argument(_) => "argument",
            Self::Json(_) => "json",
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            Self::Io { path, .. }
            | Self::Image { path, .. }
            | Self::EmptyClass { path }
            | Self::Csv { path, .. } => {
                body["path"] = json!(path.display().to_string());
            }
            Self::Htm { phase, .. } => body["phase"] = json!(phase),
            _ => {}
        }
        if let Self::Csv { line, .. } = self {
            body["line"] = json!(line);
        }
        json!({ "error": body })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
