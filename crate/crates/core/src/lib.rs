//! Evidence updates and belief queries on causal trees in time logarithmic
//! in the tree size.

pub mod bench;
pub mod contract;
pub mod dynamic;
pub mod engine;
pub mod error;
pub mod exact;
pub mod format;
pub mod gen;
pub mod jointree;
pub mod linalg;
pub mod polytree;
pub mod protein;
pub mod session;
pub mod tree;

pub use engine::{BeliefEngine, EngineKind};
pub use error::{Error, Result};
pub use linalg::{EdgeMatrix, Matrix, OpCounter, OpCounts};
pub use tree::{CausalTree, NodeId, NodeKind, TreeBuilder};
