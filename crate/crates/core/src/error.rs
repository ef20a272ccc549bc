use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("layer thickness {which} = {value:e} at node {node} is below the admissibility floor")]
    Admissibility {
        which: &'static str,
        node: usize,
        value: f64,
    },

    #[error("non-finite value in {which} at node {node}")]
    NonFinite { which: &'static str, node: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("linear solve failed: {reason} (condition estimate {condition:e})")]
    Solver { reason: String, condition: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    FixedPoint { iterations: usize, increment: f64 },

    #[error("state does not match model `{model}`: {reason}")]
    StateMismatch { model: &'static str, reason: String },
}
