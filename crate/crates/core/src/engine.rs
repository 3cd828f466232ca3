use std::fmt;
use std::str::FromStr;

use crate::dynamic::DynamicEngine;
use crate::error::{Error, Result};
use crate::exact::{FullEngine, PathEngine};
use crate::linalg::{EdgeMatrix, OpCounts};
use crate::tree::{CausalTree, NodeId};

/// Common interface of the causal-tree inference engines.
///
/// `belief` on a copy node created by binarization answers for the variable
/// it stands for.
pub trait BeliefEngine {
    fn name(&self) -> &'static str;

    /// Replaces the likelihood on an evidence leaf.
    fn update(&mut self, leaf: NodeId, likelihood: &[f64]) -> Result<()>;

    /// Normalized posterior of `node` given all evidence posted so far.
    fn belief(&self, node: NodeId) -> Result<Vec<f64>>;

    /// Matrix operations performed since construction.
    fn counts(&self) -> OpCounts;

    /// Work spent on auxiliary structures at construction that `counts`
    /// leaves out.
    fn build_counts(&self) -> OpCounts {
        OpCounts::default()
    }
}

/// Which engine answers queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    /// Contraction hierarchy, logarithmic updates and queries.
    Hierarchy,
    /// λ kept along root paths, π recomputed per query.
    Path,
    /// Full propagation after every update.
    Full,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Hierarchy, EngineKind::Path, EngineKind::Full];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Hierarchy => "hierarchy",
            EngineKind::Path => "path",
            EngineKind::Full => "full",
        }
    }

    pub fn build<M: EdgeMatrix + 'static>(self, tree: CausalTree<M>) -> Result<Box<dyn BeliefEngine + Send + Sync>> {
        Ok(match self {
            EngineKind::Hierarchy => Box::new(DynamicEngine::new(tree)?),
            EngineKind::Path => Box::new(PathEngine::new(tree)),
            EngineKind::Full => Box::new(FullEngine::new(tree)),
        })
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown engine `{s}` (hierarchy, path or full)")))
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
