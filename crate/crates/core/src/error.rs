use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge ({from}, {to}) references undeclared node {missing}")]
    DanglingEdge {
        from: NodeId,
        to: NodeId,
        missing: NodeId,
    },
    #[error("node {id}: lambda = {lambda} is invalid ({reason})")]
    InvalidLambda {
        id: NodeId,
        lambda: f64,
        reason: &'static str,
    },
    #[error("edge ({from}, {to}): mu = {mu} is invalid ({reason})")]
    InvalidMu {
        from: NodeId,
        to: NodeId,
        mu: f64,
        reason: &'static str,
    },
    #[error("no edge ({0}, {1}) in graph")]
    MissingEdge(NodeId, NodeId),
    #[error("unknown vertex {0}")]
    UnknownVertex(NodeId),
    #[error("walk must contain at least one vertex")]
    EmptyWalk,
    #[error("walk has length 0")]
    ZeroLengthWalk,
    #[error("walk is not closed")]
    OpenWalk,
    #[error("cannot concatenate: walk ends at {end} but next starts at {start}")]
    EndpointMismatch { end: NodeId, start: NodeId },
    #[error("edge multiplicities violate flow conservation at vertex {0}")]
    NotConserved(NodeId),
    #[error("edge multiplicities are all zero")]
    EmptyCirculation,
    #[error("support of edge multiplicities is not connected")]
    DisconnectedSupport,
    #[error("walk is not contractive (xi = {0})")]
    NotContractive(f64),
    #[error("invalid interval ({s}, {t}]")]
    InvalidInterval { s: u64, t: u64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown subsystem {0}")]
    UnknownSubsystem(NodeId),
    #[error("non-finite value {context}")]
    NonFinite { context: String },
    #[error("bound is zero at t = {t} but state norm is {norm}")]
    ZeroBound { t: u64, norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
