use thiserror::Error;

use crate::analyzer::{Method, SparsityMode};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("channel mismatch: input has {input} channels, filter expects {filter}")]
    ChannelMismatch { input: usize, filter: usize },

    #[error("kernel {kh}x{kw} does not fit the {h}x{w} (padded) input")]
    KernelTooLarge { kh: usize, kw: usize, h: usize, w: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("expected a {expected} layer, got {found}")]
    WrongKind { expected: &'static str, found: &'static str },

    #[error("{mode} is not supported on the {arch} architecture")]
    UnsupportedMode { arch: &'static str, mode: SparsityMode },

    #[error("method {0} cannot be scheduled on a convolution processor")]
    UnsupportedMethod(Method),

    /// A merged output cell was never written. Indicates a bug in the split plan.
    #[error("merge left output cell ({y}, {x}) unwritten")]
    Coverage { y: usize, x: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
