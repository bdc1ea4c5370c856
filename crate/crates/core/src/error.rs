use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("grade {0} out of range 0..=3")]
    GradeOutOfRange(usize),
    #[error("polar decomposition undefined at a nodal point (zero amplitude)")]
    NodalPoint,
    #[error("rotor amplitude {0} is not within tolerance of 1")]
    NotUnit(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("axis {axis} needs at least 8 nodes, got {n}")]
    TooFewNodes { axis: usize, n: usize },
    #[error("axis {axis} has non-positive length {length}")]
    Length { axis: usize, length: f64 },
    #[error("field has {got} values but the grid has {expected} nodes")]
    ValueCount { expected: usize, got: usize },
    #[error("weight is negative ({value}) at node {node}")]
    NegativeWeight { node: usize, value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiracError {
    #[error("frame undefined: nodal point at node {node}")]
    FrameUndefined { node: usize },
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("unknown initial-data preset `{0}`")]
    UnknownPreset(String),
    #[error("integrator diverged at step {step}: non-finite value at node {node}")]
    Diverged { step: u64, node: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("energy-gap window needs at least 3 rows, got {0}")]
    InsufficientWindow(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}`: expected {expected}, got `{value}`")]
    Type {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("line {line}: key `{key}`: {message}")]
    Constraint {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: bad magic {found:?}, expected \"SGHF\"")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: unsupported snapshot version {version}")]
    BadVersion { path: PathBuf, version: u32 },
    #[error("{path}: truncated snapshot ({detail})")]
    Truncated { path: PathBuf, detail: String },
    #[error("{path}: malformed header ({detail})")]
    Header { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
