use std::io;
use std::path::PathBuf;

/// Errors produced by the mosaic pipeline and its building blocks.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("unsupported image format: {}", .0.display())]
    UnsupportedFormat(PathBuf),

    #[error("corrupt image data in {}: {reason}", .path.display())]
    CorruptImage { path: PathBuf, reason: String },

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pebble count {requested} exceeds the {pixels} pixels of the image")]
    TooManyPebbles { requested: usize, pixels: usize },

    #[error("label {0} has no pixels")]
    EmptyRegion(u32),

    #[error("boundary trace produced only {0} samples (at least 3 required)")]
    DegenerateContour(usize),

    #[error("contour encloses no pixels")]
    EmptyMask,

    #[error("coefficient count {0} is not odd")]
    EvenCoefficientCount(usize),

    #[error("zero-length tangent at contour sample {0}")]
    ZeroTangent(usize),

    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
