//! Error type shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("face {face} has a repeated vertex")]
    DegenerateFace { face: usize },
    #[error("face {face} references vertex {vertex}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("mesh has zero spatial extent")]
    ZeroExtent,
    #[error("mesh has zero total surface area")]
    ZeroArea,
    #[error("face {face} has zero area")]
    ZeroAreaFace { face: usize },
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),
    #[error("fit diverged at step {step}: loss {loss:.6e} exceeds 10x initial {initial:.6e}")]
    Diverged { step: usize, loss: f64, initial: f64 },
    #[error("pad width {pad} too large for subdivision level {level}")]
    PadTooLarge { pad: u32, level: u32 },
    #[error("pad width {pad} unsupported (corner padding is implemented for pad <= 2)")]
    PadUnsupported { pad: u32 },
    #[error("cell ({i},{j}) of patch {patch} still unfilled after interpolation sweeps")]
    InterpolationStalled { patch: usize, i: i32, j: i32 },
    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("grid layout mismatch: expected level {expected_level} pad {expected_pad}, got level {level} pad {pad}")]
    LayoutMismatch {
        expected_level: u32,
        expected_pad: u32,
        level: u32,
        pad: u32,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("NaN loss at epoch {epoch}, batch {batch}; layer weight norms {norms:?}")]
    NanLoss {
        epoch: usize,
        batch: usize,
        norms: Vec<f64>,
    },
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("architecture fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("need at least {needed} timesteps, got {got}")]
    TooFewTimesteps { needed: usize, got: usize },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
