use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symbol {0:?} is not in the glyph set")]
    UnknownSymbol(char),

    #[error("render spec would clip outside the canvas: {0}")]
    Clipped(String),

    #[error("malformed {kind} file: {detail}")]
    Format { kind: &'static str, detail: String },

    #[error("unknown layer {0:?}")]
    UnknownLayer(String),

    #[error("stage `{stage}` requires `{requires}` to have completed first (missing {path})")]
    MissingDependency {
        stage: String,
        requires: String,
        path: PathBuf,
    },

    #[error(
        "stage `{stage}` output at {path} was produced by a different config (hash {found}, now {expected}); pass --stage-force to overwrite"
    )]
    ConfigMismatch {
        stage: String,
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("{0}")]
    Failed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
