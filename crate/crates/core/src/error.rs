use thiserror::Error;

/// Errors raised while recording, sweeping or differentiating a tape.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HessError {
    #[error("a tape needs at least one independent variable")]
    NoInputs,
    #[error("no output node was designated")]
    NoOutput,
    #[error("node {node}: {reason}")]
    InvalidNode { node: usize, reason: String },
    #[error("domain error at node {node}: {op} evaluated at {value}")]
    Domain {
        node: usize,
        op: &'static str,
        value: f64,
    },
    #[error("non-finite value produced at node {node}")]
    NonFinite { node: usize },
    #[error("expected a point of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tape has not been swept forward at a point")]
    NotSwept,
    #[error("dense oracle limited to {cap} nodes, tape has {nodes}")]
    DenseCapExceeded { cap: usize, nodes: usize },
    #[error("path enumeration limited to {cap} nodes, graph has {nodes}")]
    PathCapExceeded { cap: usize, nodes: usize },
    #[error("unknown function family `{0}`")]
    UnknownFamily(String),
    #[error("family `{family}` needs n >= {min}, got {n}")]
    DimensionTooSmall {
        family: String,
        min: usize,
        n: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, HessError>;
