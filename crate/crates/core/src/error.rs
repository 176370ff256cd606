use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("unsupported bit depth in {}: {color} (only 8-bit rasters are accepted)", .path.display())]
    UnsupportedBitDepth { path: PathBuf, color: String },

    #[error("corrupt or unreadable raster {}: {reason}", .path.display())]
    Decode { path: PathBuf, reason: String },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("height mismatch: key is {key} px tall, query is {query} px tall")]
    HeightMismatch { key: u32, query: u32 },

    #[error("width mismatch: key is {key} px wide, query is {query} px wide (pass the width override to allow this)")]
    WidthMismatch { key: u32, query: u32 },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    #[error("{}", insufficient_message(.class, *.wanted, *.available))]
    InsufficientPixels {
        class: &'static str,
        wanted: usize,
        available: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("prompt point ({x}, {y}) is outside the {width}x{height} image")]
    PromptOutOfBounds { x: u32, y: u32, width: u32, height: u32 },

    #[error("backend at {endpoint} unreachable/failed: {message}")]
    Backend { endpoint: String, message: String },

    #[error("backend at {endpoint} unreachable/failed: HTTP status {status}: {body}")]
    BackendStatus {
        endpoint: String,
        status: u16,
        body: String,
    },

    #[error("backend protocol violation: {0}")]
    Protocol(String),

    #[error("run {index} failed: {source}")]
    RunFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("all {0} scenes failed")]
    AllScenesFailed(usize),
}

fn insufficient_message(class: &str, wanted: usize, available: usize) -> String {
    if available == 0 {
        format!("no {class} to sample")
    } else {
        format!("only {available} {class} pixels available, {wanted} requested")
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
