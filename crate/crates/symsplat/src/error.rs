use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ply parse error: {0}")]
    PlyParse(String),

    #[error("ply header is missing property {0}")]
    PlyMissingProperty(String),

    #[error("non-finite value in vertex {index} ({field})")]
    PlyData { index: usize, field: &'static str },

    #[error("scene is empty")]
    EmptyScene,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("accumulator grid needs {required} bytes, budget is {budget} bytes")]
    GridTooLarge { required: usize, budget: usize },

    #[error("decode error at offset {offset}: {message}")]
    Decode { offset: u64, message: String },

    #[error("reconstruction failed at level {level}, stored position {index}: no match within tolerance")]
    Reconstruction { level: usize, index: usize },

    #[error("compressed size is zero")]
    ZeroCompressedSize,
}

pub type Result<T> = std::result::Result<T, Error>;
