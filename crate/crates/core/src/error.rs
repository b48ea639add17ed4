use thiserror::Error;

use crate::multigraph::{EdgeId, VertexId};
use crate::tensor::WireId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown edge id {0}")]
    UnknownEdge(EdgeId),

    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),

    #[error("self-loop {0}-{0} is not allowed in a simple graph")]
    LoopInSimpleGraph(VertexId),

    #[error("ordering is not a permutation: {0}")]
    InvalidOrdering(String),

    #[error("graph has {size} vertices, exact solver budget is {budget}")]
    GraphTooLarge { size: usize, budget: usize },

    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("tensors share no wire")]
    NoSharedWire,

    #[error("wire {0} is not part of the network")]
    UnknownWire(WireId),

    #[error("wire {0} is used by more than two tensor slots")]
    WireOverused(WireId),

    #[error("ordering leaves internal wire {0} uncontracted")]
    IncompleteOrdering(WireId),

    #[error("step {step}: tensor of rank {rank} exceeds the memory budget of 4^{budget_rank} entries")]
    MemoryBudget {
        step: usize,
        rank: usize,
        budget_rank: usize,
    },

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("invalid measurement: {0}")]
    Measurement(String),

    #[error("too many qubits for the dense oracle: {qubits} > {limit}")]
    OracleTooLarge { qubits: usize, limit: usize },

    #[error("qubit {0} measured twice")]
    QubitMeasuredTwice(VertexId),

    #[error("branch probability {0:e} is below the degeneracy guard")]
    DegenerateTranscript(f64),

    #[error("program is not oblivious: {0}")]
    NotOblivious(String),

    #[error("expansion check failed: {0}")]
    ExpansionBound(String),
}
