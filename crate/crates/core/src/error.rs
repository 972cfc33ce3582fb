use std::fmt;

/// Where in an input file a parse error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Byte(usize),
    Line(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Byte(o) => write!(f, "byte offset {o}"),
            Location::Line(l) => write!(f, "line {l}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        what: &'static str,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("empty mask")]
    EmptyMask,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("undefined orientation at ({x}, {y})")]
    UndefinedOrientation { x: usize, y: usize },
    #[error("no coherent orientation inside the mask")]
    NoCoherentOrientation,
    #[error("no reliable ridge spacing inside the mask")]
    NoRidgeSpacing,
    #[error("skeleton has no ridge pixels")]
    EmptySkeleton,
    #[error("skeleton not thin at ({x}, {y})")]
    SkeletonNotThin { x: usize, y: usize },
    #[error("empty foreground after augment")]
    EmptyAfterAugment,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no inputs")]
    NoInputs,
    #[error("parse error in {format} at {location}: {message}")]
    Parse {
        format: &'static str,
        location: Location,
        message: String,
    },
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(format: &'static str, location: Location, message: impl Into<String>) -> Self {
        Error::Parse {
            format,
            location,
            message: message.into(),
        }
    }
}
