use thiserror::Error;

use crate::tree::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// The evidence has zero joint probability.
    #[error("inconsistent evidence{}", .node.map(|n| format!(" at node {}", n.index())).unwrap_or_default())]
    InconsistentEvidence { node: Option<NodeId> },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("invalid model: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_node(self, node: NodeId) -> Self {
        match self {
            Error::InconsistentEvidence { node: None } => Error::InconsistentEvidence { node: Some(node) },
            other => other,
        }
    }

    pub fn is_inconsistent(&self) -> bool {
        matches!(self, Error::InconsistentEvidence { .. })
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Lookup(_) => 1,
            Error::InconsistentEvidence { .. } => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
