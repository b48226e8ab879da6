use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Bytes do not follow the expected container layout (TIFF, shapefile, dBASE).
    #[error("format error: {0}")]
    Format(String),

    /// A raster lacks the tags needed to place it on the ground.
    #[error("georeferencing error: {0}")]
    Georef(String),

    #[error("unsupported feature: {0}")]
    Unsupported(String),

    #[error("unsupported shape type {0} (only Polygon (5) and Null (0) are accepted)")]
    UnsupportedShape(i32),

    #[error("incompatible raster grids: {0}")]
    IncompatibleGrid(String),

    #[error("raster not aligned to the shared grid: {0}")]
    Alignment(String),

    #[error("incompatible CRS: raster {raster} vs parcels {parcels}")]
    IncompatibleCrs { raster: u32, parcels: u32 },

    #[error("window does not intersect the raster")]
    EmptyWindow,

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Counts that must agree do not (record counts, RLE totals).
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("unknown field {field:?}; available: {available:?}")]
    Field { field: String, available: Vec<String> },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown label {label:?}; accepted labels: {accepted:?}")]
    Label { label: String, accepted: Vec<&'static str> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a file name to an error so CLI output names the culprit.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with file context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}
