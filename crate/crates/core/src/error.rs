use thiserror::Error;

use crate::diagram::VertexId;
use crate::rewrite::RuleId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no binding for parameter `{0}`")]
    MissingBinding(String),
    #[error("wire references undeclared vertex {0}")]
    DanglingWire(VertexId),
    #[error("boundary vertex {0} must have degree exactly 1")]
    BoundaryDegreeViolation(VertexId),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("schema violation at {path}: {msg}")]
    SchemaViolation { path: String, msg: String },
    #[error("stale {0:?} match")]
    StaleMatch(RuleId),
    #[error("vertex {0} is not a recognized phase gadget hub")]
    NotAGadget(VertexId),
    #[error("spider {0} has no parameter part to decompose")]
    NotDecomposable(VertexId),
    #[error("region arity mismatch: region has {region:?}, replacement has {replacement:?}")]
    RegionArityMismatch {
        region: (usize, usize),
        replacement: (usize, usize),
    },
    #[error("diagram is not closed")]
    NotClosed,
    #[error("vertex {0} has a phase outside the exact contraction domain")]
    UnsupportedPhase(VertexId),
    #[error("term budget exceeded ({0} terms); apply lightcone reduction first")]
    TermBudgetExceeded(usize),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("ansatz does not fit the graph: {0}")]
    SpecMismatch(String),
    #[error("observable support qubit {0} out of range")]
    SupportOutOfRange(usize),
    #[error("edge ({0},{1}) not in graph")]
    EdgeNotInGraph(usize, usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
