//! Causal trees: construction, normalization to binary complete form, and
//! evidence bookkeeping.
//!
//! A [`TreeBuilder`] accepts rooted trees of any fan-out. [`TreeBuilder::binarize`]
//! turns it into a [`CausalTree`] in which every internal node has exactly two
//! children: an over-full node `p` keeps its first child and hands the rest to
//! a right spine of copies `p'`, each linked by the identity matrix; a node with
//! a single child gets a dummy leaf whose likelihood is permanently all-ones.
//! Original nodes keep their [`NodeId`]; copies and dummies are appended.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{EdgeMatrix, Matrix, STOCHASTIC_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn new(index: usize) -> Self {
        NodeId(index)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Variable,
    /// Identity-linked copy introduced by binarization; beliefs alias to `of`.
    Copy { of: NodeId },
    /// Padding leaf; its likelihood is fixed at all-ones.
    Dummy,
}

#[derive(Clone, Debug)]
pub struct Node<M> {
    label: u64,
    name: String,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    /// Conditional matrix of this node given its parent.
    edge: Option<M>,
    kind: NodeKind,
    likelihood: Option<Vec<f64>>,
}

impl<M> Node<M> {
    pub fn label(&self) -> u64 {
        self.label
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }
}

/// Rooted tree with arbitrary fan-out, prior to binarization.
#[derive(Clone, Debug)]
pub struct TreeBuilder<M = Matrix> {
    dim: usize,
    nodes: Vec<Node<M>>,
    by_label: HashMap<u64, NodeId>,
    next_label: u64,
    root: Option<NodeId>,
    prior: Option<Vec<f64>>,
}

impl<M: EdgeMatrix> TreeBuilder<M> {
    pub fn new(dim: usize) -> Self {
        TreeBuilder { dim, nodes: Vec::new(), by_label: HashMap::new(), next_label: 0, root: None, prior: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, label: u64) -> Option<NodeId> {
        self.by_label.get(&label).copied()
    }

    pub fn add_node(&mut self, label: u64, name: impl Into<String>) -> Result<NodeId> {
        self.add_node_with_kind(label, name, NodeKind::Variable)
    }

    pub fn add_node_with_kind(&mut self, label: u64, name: impl Into<String>, kind: NodeKind) -> Result<NodeId> {
        if self.by_label.contains_key(&label) {
            return Err(Error::Structure(format!("duplicate node id {label}")));
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            label,
            name: name.into(),
            parent: None,
            children: Vec::new(),
            edge: None,
            kind,
            likelihood: None,
        });
        self.by_label.insert(label, id);
        self.next_label = self.next_label.max(label.saturating_add(1));
        Ok(id)
    }

    /// Adds a node labelled by its index.
    pub fn add_variable(&mut self, name: impl Into<String>) -> NodeId {
        let label = self.next_label();
        self.add_node(label, name).expect("fresh label")
    }

    fn next_label(&self) -> u64 {
        self.next_label
    }

    fn check_id(&self, id: NodeId) -> Result<()> {
        if id.0 >= self.nodes.len() {
            return Err(Error::Lookup(format!("unknown node {id}")));
        }
        Ok(())
    }

    pub fn set_root(&mut self, root: NodeId) -> Result<()> {
        self.check_id(root)?;
        self.root = Some(root);
        Ok(())
    }

    pub fn set_prior(&mut self, prior: Vec<f64>) -> Result<()> {
        if prior.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: prior.len() });
        }
        self.prior = Some(prior);
        Ok(())
    }

    pub fn add_edge(&mut self, parent: NodeId, child: NodeId, matrix: M) -> Result<()> {
        self.check_id(parent)?;
        self.check_id(child)?;
        if parent == child {
            return Err(Error::Structure(format!("self loop at {}", self.nodes[parent.0].label)));
        }
        if let Some(p) = self.nodes[child.0].parent {
            return Err(Error::Structure(format!(
                "node {} has multiple parents ({} and {})",
                self.nodes[child.0].label, self.nodes[p.0].label, self.nodes[parent.0].label
            )));
        }
        if matrix.rows() != self.dim || matrix.cols() != self.dim {
            return Err(Error::Dimension { expected: self.dim, found: matrix.rows().max(matrix.cols()) });
        }
        self.nodes[child.0].parent = Some(parent);
        self.nodes[child.0].edge = Some(matrix);
        self.nodes[parent.0].children.push(child);
        Ok(())
    }

    pub fn set_likelihood(&mut self, node: NodeId, likelihood: Vec<f64>) -> Result<()> {
        self.check_id(node)?;
        check_likelihood(self.dim, &likelihood)?;
        self.nodes[node.0].likelihood = Some(likelihood);
        Ok(())
    }

    fn resolve_root(&self) -> Result<NodeId> {
        if let Some(r) = self.root {
            return Ok(r);
        }
        let mut roots = self.nodes.iter().enumerate().filter(|(_, n)| n.parent.is_none());
        match (roots.next(), roots.next()) {
            (Some((i, _)), None) => Ok(NodeId(i)),
            (None, _) => Err(Error::Structure("no root: every node has a parent".into())),
            (Some(_), Some(_)) => Err(Error::Structure("several parentless nodes and no root given".into())),
        }
    }

    fn check_structure(&self, root: NodeId) -> Result<()> {
        if let Some(p) = self.nodes[root.0].parent {
            return Err(Error::Structure(format!(
                "root {} has parent {}",
                self.nodes[root.0].label, self.nodes[p.0].label
            )));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        let mut count = 0;
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x.0], true) {
                return Err(Error::Structure("cycle detected".into()));
            }
            count += 1;
            stack.extend(self.nodes[x.0].children.iter().copied());
        }
        if count != self.nodes.len() {
            let missing = seen.iter().position(|s| !s).unwrap();
            return Err(Error::Structure(format!(
                "node {} is not reachable from the root (cycle or disconnected)",
                self.nodes[missing].label
            )));
        }
        Ok(())
    }

    /// Normalizes to a binary complete tree.
    pub fn binarize(mut self) -> Result<CausalTree<M>> {
        let root = self.resolve_root()?;
        self.check_structure(root)?;
        if self.prior.is_none() {
            return Err(Error::Structure("missing root prior".into()));
        }
        for n in &self.nodes {
            if n.likelihood.is_some() && !n.children.is_empty() {
                return Err(Error::Usage(format!("evidence on non-leaf node {}", n.label)));
            }
        }
        let mut label = self.next_label();
        let original = self.nodes.len();
        for p in 0..original {
            let children = self.nodes[p].children.clone();
            match children.len() {
                0 | 2 => {}
                1 => {
                    let name = format!("~dummy{label}");
                    let d = self.add_node_with_kind(label, name, NodeKind::Dummy)?;
                    label += 1;
                    self.link(NodeId(p), d, M::vacuous(self.dim));
                }
                _ => {
                    let alias = match self.nodes[p].kind {
                        NodeKind::Copy { of } => of,
                        _ => NodeId(p),
                    };
                    let mut holder = NodeId(p);
                    self.nodes[p].children = vec![children[0]];
                    let rest = &children[1..];
                    for (j, &c) in rest.iter().enumerate() {
                        if j + 1 == rest.len() {
                            // last child joins the final copy directly
                            self.nodes[holder.0].children.push(c);
                            self.nodes[c.0].parent = Some(holder);
                            break;
                        }
                        let name = format!("{}'{}", self.nodes[p].name, j + 1);
                        let copy = self.add_node_with_kind(label, name, NodeKind::Copy { of: alias })?;
                        label += 1;
                        self.link(holder, copy, M::identity(self.dim));
                        self.nodes[copy.0].children.push(c);
                        self.nodes[c.0].parent = Some(copy);
                        holder = copy;
                    }
                }
            }
        }
        self.root = Some(root);
        self.into_tree_unchecked()
    }

    fn link(&mut self, parent: NodeId, child: NodeId, m: M) {
        self.nodes[child.0].parent = Some(parent);
        self.nodes[child.0].edge = Some(m);
        self.nodes[parent.0].children.push(child);
    }

    /// Produces a tree without normalization. Use [`CausalTree::validate`] to
    /// inspect the result.
    pub fn into_tree_unchecked(self) -> Result<CausalTree<M>> {
        let root = self.resolve_root()?;
        let prior = self.prior.ok_or_else(|| Error::Structure("missing root prior".into()))?;
        Ok(CausalTree { dim: self.dim, nodes: self.nodes, by_label: self.by_label, root, prior })
    }
}

fn check_likelihood(dim: usize, v: &[f64]) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Dimension { expected: dim, found: v.len() });
    }
    if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain(format!("likelihood entries must be finite and nonnegative, got {bad}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Arity,
    Links,
    Root,
    Reachability,
    EvidenceOnLeaf,
    Likelihood,
    EdgeShape,
    Stochastic,
    Prior,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub node: Option<NodeId>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.rule, self.message)
    }
}

/// Binary complete causal tree with a root prior, an edge matrix per
/// parent-child link, and likelihood vectors on leaves.
#[derive(Clone, Debug)]
pub struct CausalTree<M = Matrix> {
    dim: usize,
    nodes: Vec<Node<M>>,
    by_label: HashMap<u64, NodeId>,
    root: NodeId,
    prior: Vec<f64>,
}

impl<M: EdgeMatrix> CausalTree<M> {
    /// Domain size shared by every variable.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node(&self, id: NodeId) -> &Node<M> {
        &self.nodes[id.0]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.0 < self.nodes.len()
    }

    pub fn find(&self, label: u64) -> Option<NodeId> {
        self.by_label.get(&label).copied()
    }

    pub fn find_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn label(&self, id: NodeId) -> u64 {
        self.nodes[id.0].label
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    /// `(left, right)` for internal nodes of a binary tree.
    pub fn pair(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        match self.nodes[id.0].children.as_slice() {
            [l, r] => Some((*l, *r)),
            _ => None,
        }
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.0].children.is_empty()
    }

    /// Conditional matrix of `id` given its parent.
    pub fn edge(&self, id: NodeId) -> Option<&M> {
        self.nodes[id.0].edge.as_ref()
    }

    /// The original variable a copy stands for; other nodes map to themselves.
    pub fn resolve(&self, id: NodeId) -> NodeId {
        match self.nodes[id.0].kind {
            NodeKind::Copy { of } => of,
            _ => id,
        }
    }

    pub fn likelihood(&self, leaf: NodeId) -> Cow<'_, [f64]> {
        match &self.nodes[leaf.0].likelihood {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(vec![1.0; self.dim]),
        }
    }

    pub fn has_evidence(&self, leaf: NodeId) -> bool {
        self.nodes[leaf.0].likelihood.is_some()
    }

    /// Checks that `likelihood` may be posted on `leaf`.
    pub fn check_evidence(&self, leaf: NodeId, likelihood: &[f64]) -> Result<()> {
        if !self.contains(leaf) {
            return Err(Error::Lookup(format!("unknown node {leaf}")));
        }
        let n = &self.nodes[leaf.0];
        if !n.children.is_empty() {
            return Err(Error::Usage(format!("node {} is not a leaf", n.label)));
        }
        if n.kind == NodeKind::Dummy {
            return Err(Error::Usage(format!("node {} is a padding leaf and takes no evidence", n.label)));
        }
        check_likelihood(self.dim, likelihood)
    }

    /// Records a likelihood on a leaf. No propagation happens here.
    pub fn set_evidence(&mut self, leaf: NodeId, likelihood: Vec<f64>) -> Result<()> {
        self.check_evidence(leaf, &likelihood)?;
        self.nodes[leaf.0].likelihood = Some(likelihood);
        Ok(())
    }

    /// Resets a leaf to the vacuous all-ones likelihood.
    pub fn retract_evidence(&mut self, leaf: NodeId) -> Result<()> {
        self.set_evidence(leaf, vec![1.0; self.dim])
    }

    /// Gives `x` a fresh leaf child linked by the identity matrix and returns
    /// it. Observations on `x` are then posted on the new leaf.
    pub fn attach_evidence_leaf(&mut self, x: NodeId) -> Result<NodeId> {
        if !self.contains(x) {
            return Err(Error::Lookup(format!("unknown node {x}")));
        }
        if self.nodes[x.0].kind == NodeKind::Dummy {
            return Err(Error::Usage("cannot attach evidence to a padding leaf".into()));
        }
        let mut label = self.nodes.iter().map(|n| n.label + 1).max().unwrap_or(0);
        let name = format!("e:{}", self.nodes[x.0].name);
        let leaf = self.push_node(label, name, NodeKind::Variable);
        label += 1;
        match self.pair(x) {
            None => {
                // x was a leaf: its evidence moves to the new leaf
                let lik = self.nodes[x.0].likelihood.take();
                self.nodes[leaf.0].likelihood = lik;
                self.link(x, leaf, M::identity(self.dim));
                let dummy = self.push_node(label, format!("~dummy{label}"), NodeKind::Dummy);
                self.link(x, dummy, M::vacuous(self.dim));
            }
            Some((_, right)) => {
                let alias = self.resolve(x);
                let name = format!("{}'e", self.nodes[x.0].name);
                let copy = self.push_node(label, name, NodeKind::Copy { of: alias });
                self.nodes[x.0].children.pop();
                self.link(x, copy, M::identity(self.dim));
                self.nodes[copy.0].children.push(right);
                self.nodes[right.0].parent = Some(copy);
                self.link(copy, leaf, M::identity(self.dim));
            }
        }
        Ok(leaf)
    }

    fn push_node(&mut self, label: u64, name: String, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { label, name, parent: None, children: Vec::new(), edge: None, kind, likelihood: None });
        self.by_label.insert(label, id);
        id
    }

    fn link(&mut self, parent: NodeId, child: NodeId, m: M) {
        self.nodes[child.0].parent = Some(parent);
        self.nodes[child.0].edge = Some(m);
        self.nodes[parent.0].children.push(child);
    }

    /// Root-first order, children left to right. Iterative, so arbitrarily
    /// deep trees are fine.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.nodes[x.0].children.iter().rev().copied());
        }
        out
    }

    /// Leaves in left-to-right (in-order) sequence.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&x| self.is_leaf(x)).collect()
    }

    pub fn depth(&self, x: NodeId) -> usize {
        let mut d = 0;
        let mut cur = x;
        while let Some(p) = self.nodes[cur.0].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Nodes from the root down to `x`, inclusive.
    pub fn path_from_root(&self, x: NodeId) -> Vec<NodeId> {
        let mut path = vec![x];
        let mut cur = x;
        while let Some(p) = self.nodes[cur.0].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Leaves that accept evidence (everything but padding).
    pub fn evidence_leaves(&self) -> Vec<NodeId> {
        self.leaves().into_iter().filter(|&x| self.kind(x) != NodeKind::Dummy).collect()
    }

    /// Every broken invariant, as data. Empty iff the tree is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |node: Option<NodeId>, rule: Rule, message: String| out.push(Violation { node, rule, message });
        let label = |id: NodeId| self.nodes[id.0].label;

        if self.prior.len() != self.dim {
            push(None, Rule::Prior, format!("prior has {} entries, expected {}", self.prior.len(), self.dim));
        } else if self.prior.iter().any(|p| p.is_nan() || *p < 0.0) || (self.prior.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
            push(None, Rule::Prior, "prior must be nonnegative and sum to 1".into());
        }
        if self.nodes[self.root.0].parent.is_some() {
            push(Some(self.root), Rule::Root, format!("root {} has a parent", label(self.root)));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            if !matches!(n.children.len(), 0 | 2) {
                push(Some(id), Rule::Arity, format!("node {} has {} children", n.label, n.children.len()));
            }
            for &c in &n.children {
                if self.nodes[c.0].parent != Some(id) {
                    push(Some(c), Rule::Links, format!("child {} of {} does not point back", label(c), n.label));
                }
            }
            if id != self.root {
                match n.parent {
                    None => push(Some(id), Rule::Root, format!("node {} has no parent and is not the root", n.label)),
                    Some(p) => {
                        if !self.nodes[p.0].children.contains(&id) {
                            push(Some(id), Rule::Links, format!("parent {} does not list {}", label(p), n.label));
                        }
                    }
                }
                match &n.edge {
                    None => push(Some(id), Rule::EdgeShape, format!("edge into {} has no matrix", n.label)),
                    Some(m) => {
                        if m.rows() != self.dim || m.cols() != self.dim {
                            push(Some(id), Rule::EdgeShape, format!("edge into {} is {}x{}", n.label, m.rows(), m.cols()));
                        } else {
                            let dense = m.to_dense();
                            if !dense.is_row_stochastic(STOCHASTIC_TOL) {
                                let parent = n.parent.map(|p| label(p).to_string()).unwrap_or_else(|| "?".into());
                                push(Some(id), Rule::Stochastic, format!("edge {parent}->{} is not row-stochastic", n.label));
                            }
                        }
                    }
                }
            }
            if let Some(l) = &n.likelihood {
                if !n.children.is_empty() {
                    push(Some(id), Rule::EvidenceOnLeaf, format!("evidence on internal node {}", n.label));
                }
                if check_likelihood(self.dim, l).is_err() {
                    push(Some(id), Rule::Likelihood, format!("bad likelihood on {}", n.label));
                }
            }
        }
        // reachability / cycles
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        let mut cyclic = false;
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x.0], true) {
                cyclic = true;
                continue;
            }
            stack.extend(self.nodes[x.0].children.iter().copied());
        }
        if cyclic {
            push(None, Rule::Reachability, "cycle reachable from the root".into());
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                push(Some(NodeId(i)), Rule::Reachability, format!("node {} unreachable from root", self.nodes[i].label));
            }
        }
        out
    }

    /// Rebuilds a builder holding the same nodes, links and evidence.
    pub fn to_builder(&self) -> TreeBuilder<M> {
        TreeBuilder {
            dim: self.dim,
            nodes: self.nodes.clone(),
            by_label: self.by_label.clone(),
            next_label: self.nodes.iter().map(|n| n.label.saturating_add(1)).max().unwrap_or(0),
            root: Some(self.root),
            prior: Some(self.prior.clone()),
        }
    }

    /// Rewrites every edge matrix through `f`, keeping the structure.
    pub fn map_matrices<N: EdgeMatrix>(&self, mut f: impl FnMut(&M) -> N) -> CausalTree<N> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                label: n.label,
                name: n.name.clone(),
                parent: n.parent,
                children: n.children.clone(),
                edge: n.edge.as_ref().map(&mut f),
                kind: n.kind,
                likelihood: n.likelihood.clone(),
            })
            .collect();
        CausalTree { dim: self.dim, nodes, by_label: self.by_label.clone(), root: self.root, prior: self.prior.clone() }
    }
}
