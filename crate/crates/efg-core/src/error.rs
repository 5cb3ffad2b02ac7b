//! Error types shared across the crate.

use thiserror::Error;

use crate::graph::NodeId;

/// A DOT ingest diagnostic with a stable code and a source position where one
/// is available. The code identifies the first violated invariant; the message
/// names the offending node or attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
    /// 1-based line/column of the offending token, when known.
    pub position: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticCode {
    Parse,
    DuplicateEntry,
    DuplicateExit,
    MissingEntry,
    MissingExit,
    EntryHasPredecessors,
    ExitHasSuccessors,
    UnreachableNode,
    BranchSingleOutEdge,
    UnknownAttributeValue,
    EventAttributeOnNonEvent,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.position {
            Some((line, col)) => write!(f, "{:?} at {}:{}: {}", self.code, line, col, self.message),
            None => write!(f, "{:?}: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("node not found: {0}")]
    NotFound(NodeId),

    #[error("transformation not applicable at node {node}: {reason}")]
    TransformNotApplicable { node: NodeId, reason: String },

    #[error("oracle too large: {0}")]
    OracleTooLarge(String),

    #[error("event spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("invalid generator config: {0}")]
    ConfigError(String),

    #[error("ingest: {0}")]
    Ingest(Diagnostic),
}

pub type Result<T> = std::result::Result<T, Error>;
