use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: node id {node} out of range for {node_count} nodes")]
    UnknownNode {
        line: usize,
        node: usize,
        node_count: usize,
    },

    #[error("line {line}: edge weight {weight} is not positive")]
    NonPositiveWeight { line: usize, weight: f64 },

    #[error("line {line}: duplicate edge {source_node} -> {target}")]
    DuplicateEdge {
        line: usize,
        source_node: usize,
        target: usize,
    },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("invalid graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("alpha = {0} must lie strictly between 0 and 1")]
    AlphaOutOfRange(f64),

    #[error("epsilon = {epsilon} must satisfy 0 < epsilon < 1/(2m) = {bound}")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },

    #[error("node {node} out of range for {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid strategy for player {player}: {reason}")]
    InvalidStrategy { player: usize, reason: String },

    #[error(
        "power iteration did not converge after {iterations} iterations (last change {change:e})"
    )]
    NoConvergence { iterations: usize, change: f64 },

    #[error("enumeration of {required} candidates exceeds the cap of {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("equilibrium verification failed: {0}")]
    VerificationFailed(String),
}
