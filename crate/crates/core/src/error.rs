use std::io;

use thiserror::Error;

/// Errors produced by the dctree library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("truncated data: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("invalid dimensions {width}x{height}x{channels}")]
    Dimensions {
        width: usize,
        height: usize,
        channels: usize,
    },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("{format} cannot store {channels}-channel {depth} images")]
    FormatMismatch {
        format: &'static str,
        channels: usize,
        depth: &'static str,
    },

    #[error("label {0} does not fit the output format")]
    LabelOverflow(u32),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("invalid node id {0}")]
    InvalidNode(usize),

    #[error("derivate {0} is a border sentinel")]
    Sentinel(usize),

    #[error("graph has no pixels")]
    EmptyGraph,

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("degenerate box {0}")]
    DegenerateBox(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
