//! Linear-time and brute-force inference, used as baselines and oracles.
//!
//! * [`propagate_all`]: two full passes, λ bottom-up and π top-down.
//! * [`PathEngine`]: keeps λ current along root paths and recomputes π on
//!   demand, `O(k²·depth)` per operation.
//! * [`joint_marginals`]: enumerates the joint distribution. Exponential,
//!   only meant for trees of a dozen or so nodes.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::engine::BeliefEngine;
use crate::error::{Error, Result};
use crate::linalg::{hadamard, normalize, rescale_if_tiny, EdgeMatrix, Matrix, OpCounter, OpCounts};
use crate::tree::{CausalTree, NodeId};

/// Largest joint state space [`joint_marginals`] will enumerate.
pub const MAX_JOINT_STATES: f64 = 1e7;

/// λ, π and beliefs for every node.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub lambda: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    pub belief: Vec<Vec<f64>>,
}

impl Propagation {
    pub fn belief(&self, x: NodeId) -> &[f64] {
        &self.belief[x.index()]
    }
}

/// λ for every node, computed leaves-up. `messages[c]` holds `M_c · λ(c)`.
fn lambda_pass<M: EdgeMatrix>(tree: &CausalTree<M>, order: &[NodeId], ops: &OpCounter) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = tree.len();
    let mut lambda = vec![Vec::new(); n];
    let mut messages = vec![Vec::new(); n];
    for &x in order.iter().rev() {
        let mut lx = match tree.pair(x) {
            None => tree.likelihood(x).into_owned(),
            Some((l, r)) => messages[l.index()].iter().zip(&messages[r.index()]).map(|(a, b)| a * b).collect(),
        };
        rescale_if_tiny(&mut lx);
        if let Some(m) = tree.edge(x) {
            messages[x.index()] = m.apply(&lx, ops);
        }
        lambda[x.index()] = lx;
    }
    (lambda, messages)
}

/// Full two-pass propagation. Exactly one matrix-vector product per edge in
/// each direction.
pub fn propagate_all<M: EdgeMatrix>(tree: &CausalTree<M>, ops: &OpCounter) -> Result<Propagation> {
    let order = tree.preorder();
    let (lambda, messages) = lambda_pass(tree, &order, ops);
    let n = tree.len();
    let mut pi = vec![Vec::new(); n];
    pi[tree.root().index()] = tree.prior().to_vec();
    for &x in &order {
        if let Some((l, r)) = tree.pair(x) {
            for (child, sibling) in [(l, r), (r, l)] {
                let base: Vec<f64> = pi[x.index()].iter().zip(&messages[sibling.index()]).map(|(a, b)| a * b).collect();
                let mut pc = tree.edge(child).expect("edge").apply_transpose(&base, ops);
                rescale_if_tiny(&mut pc);
                pi[child.index()] = pc;
            }
        }
    }
    let mut belief = vec![Vec::new(); n];
    for &x in &order {
        let i = x.index();
        let joint: Vec<f64> = lambda[i].iter().zip(&pi[i]).map(|(a, b)| a * b).collect();
        belief[i] = normalize(&joint).map_err(|e| e.at_node(x))?;
    }
    // report the first affected node in root-first order
    Ok(Propagation { lambda, pi, belief })
}

/// λ vectors only (one bottom-up pass).
pub fn lambda_all<M: EdgeMatrix>(tree: &CausalTree<M>, ops: &OpCounter) -> Vec<Vec<f64>> {
    lambda_pass(tree, &tree.preorder(), ops).0
}

/// Beliefs by enumerating every joint assignment, weighting by the product
/// of the prior, the edge conditionals and the leaf likelihoods.
pub fn joint_marginals<M: EdgeMatrix>(tree: &CausalTree<M>) -> Result<Vec<Vec<f64>>> {
    let k = tree.dim();
    let n = tree.len();
    if (k as f64).powi(n as i32) > MAX_JOINT_STATES {
        return Err(Error::Scale(format!("{k}^{n} joint states exceed the enumeration limit")));
    }
    let order = tree.preorder();
    let position: Vec<usize> = {
        let mut p = vec![0; n];
        for (i, x) in order.iter().enumerate() {
            p[x.index()] = i;
        }
        p
    };
    let dense: Vec<Option<Matrix>> = order.iter().map(|&x| tree.edge(x).map(|m| m.to_dense())).collect();
    let parent_pos: Vec<Option<usize>> = order.iter().map(|&x| tree.parent(x).map(|p| position[p.index()])).collect();
    let lik: Vec<Option<Vec<f64>>> =
        order.iter().map(|&x| tree.is_leaf(x).then(|| tree.likelihood(x).into_owned())).collect();

    let mut marg = vec![vec![0.0; k]; n];
    let mut values = vec![0usize; n];
    let mut weights = vec![0.0; n + 1];
    weights[0] = 1.0;
    // prior, dense edges, parent positions, leaf likelihoods
    type Ctx<'a> = (&'a [f64], &'a [Option<Matrix>], &'a [Option<usize>], &'a [Option<Vec<f64>>]);
    // depth-first over positions in root-first order; zero-weight branches are pruned
    fn visit(
        d: usize,
        k: usize,
        values: &mut [usize],
        weights: &mut [f64],
        ctx: &Ctx,
        marg: &mut [Vec<f64>],
    ) {
        let (prior, dense, parent_pos, lik) = ctx;
        if d == values.len() {
            let w = weights[d];
            for (i, &v) in values.iter().enumerate() {
                marg[i][v] += w;
            }
            return;
        }
        for v in 0..k {
            let mut w = weights[d];
            w *= match parent_pos[d] {
                None => prior[v],
                Some(p) => dense[d].as_ref().unwrap().get(values[p], v),
            };
            if let Some(l) = &lik[d] {
                w *= l[v];
            }
            if w == 0.0 {
                continue;
            }
            values[d] = v;
            weights[d + 1] = w;
            visit(d + 1, k, values, weights, ctx, marg);
        }
    }
    let ctx = (tree.prior(), dense.as_slice(), parent_pos.as_slice(), lik.as_slice());
    visit(0, k, &mut values, &mut weights, &ctx, &mut marg);

    let mut out = vec![Vec::new(); n];
    for (i, &x) in order.iter().enumerate() {
        out[x.index()] = normalize(&marg[i]).map_err(|e| e.at_node(x))?;
    }
    Ok(out)
}

/// Depth-bounded incremental engine: λ is kept current along root paths,
/// π is recomputed transiently per query.
#[derive(Debug)]
pub struct PathEngine<M = Matrix> {
    tree: CausalTree<M>,
    lambda: Vec<Vec<f64>>,
    messages: Vec<Vec<f64>>,
    ops: OpCounter,
    lambda_recomputes: AtomicU64,
    pi_recomputes: AtomicU64,
}

impl<M: EdgeMatrix> PathEngine<M> {
    pub fn new(tree: CausalTree<M>) -> Self {
        let ops = OpCounter::new();
        let order = tree.preorder();
        let (lambda, messages) = lambda_pass(&tree, &order, &ops);
        PathEngine { tree, lambda, messages, ops, lambda_recomputes: AtomicU64::new(0), pi_recomputes: AtomicU64::new(0) }
    }

    pub fn tree(&self) -> &CausalTree<M> {
        &self.tree
    }

    pub fn lambda(&self, x: NodeId) -> &[f64] {
        &self.lambda[x.index()]
    }

    /// Posts a likelihood on `leaf` and refreshes λ on its ancestors.
    pub fn path_update(&mut self, leaf: NodeId, likelihood: &[f64]) -> Result<()> {
        self.tree.set_evidence(leaf, likelihood.to_vec())?;
        let mut lx = likelihood.to_vec();
        rescale_if_tiny(&mut lx);
        self.messages[leaf.index()] = match self.tree.edge(leaf) {
            Some(m) => m.apply(&lx, &self.ops),
            None => Vec::new(),
        };
        self.lambda[leaf.index()] = lx;
        let mut cur = leaf;
        while let Some(a) = self.tree.parent(cur) {
            let (l, r) = self.tree.pair(a).expect("binary");
            let mut la = hadamard(&self.messages[l.index()], &self.messages[r.index()])?;
            rescale_if_tiny(&mut la);
            if let Some(m) = self.tree.edge(a) {
                self.messages[a.index()] = m.apply(&la, &self.ops);
            }
            self.lambda[a.index()] = la;
            self.lambda_recomputes.fetch_add(1, Ordering::Relaxed);
            cur = a;
        }
        Ok(())
    }

    /// π(x) from the root down, using the current λ of off-path siblings.
    pub fn pi(&self, x: NodeId) -> Vec<f64> {
        let path = self.tree.path_from_root(x);
        let mut pi = self.tree.prior().to_vec();
        for w in path.windows(2) {
            let (u, c) = (w[0], w[1]);
            let (l, r) = self.tree.pair(u).expect("binary");
            let sibling = if l == c { r } else { l };
            let base: Vec<f64> = pi.iter().zip(&self.messages[sibling.index()]).map(|(a, b)| a * b).collect();
            pi = self.tree.edge(c).expect("edge").apply_transpose(&base, &self.ops);
            rescale_if_tiny(&mut pi);
            self.pi_recomputes.fetch_add(1, Ordering::Relaxed);
        }
        pi
    }

    pub fn path_query(&self, x: NodeId) -> Result<Vec<f64>> {
        let x = self.tree.resolve(x);
        let pi = self.pi(x);
        normalize(&hadamard(&self.lambda[x.index()], &pi)?).map_err(|e| e.at_node(x))
    }

    pub fn lambda_recomputes(&self) -> u64 {
        self.lambda_recomputes.load(Ordering::Relaxed)
    }

    pub fn pi_recomputes(&self) -> u64 {
        self.pi_recomputes.load(Ordering::Relaxed)
    }
}

impl<M: EdgeMatrix> BeliefEngine for PathEngine<M> {
    fn name(&self) -> &'static str {
        "path"
    }

    fn update(&mut self, leaf: NodeId, likelihood: &[f64]) -> Result<()> {
        self.path_update(leaf, likelihood)
    }

    fn belief(&self, node: NodeId) -> Result<Vec<f64>> {
        if !self.tree.contains(node) {
            return Err(Error::Lookup(format!("unknown node {node}")));
        }
        self.path_query(node)
    }

    fn counts(&self) -> OpCounts {
        self.ops.snapshot()
    }
}

/// Recomputes every belief after each update; queries are table lookups.
#[derive(Debug)]
pub struct FullEngine<M = Matrix> {
    tree: CausalTree<M>,
    state: Result<Propagation>,
    ops: OpCounter,
}

impl<M: EdgeMatrix> FullEngine<M> {
    pub fn new(tree: CausalTree<M>) -> Self {
        let ops = OpCounter::new();
        let state = propagate_all(&tree, &ops);
        FullEngine { tree, state, ops }
    }

    pub fn tree(&self) -> &CausalTree<M> {
        &self.tree
    }

    pub fn propagation(&self) -> Result<&Propagation> {
        self.state.as_ref().map_err(Clone::clone)
    }
}

impl<M: EdgeMatrix> BeliefEngine for FullEngine<M> {
    fn name(&self) -> &'static str {
        "full"
    }

    fn update(&mut self, leaf: NodeId, likelihood: &[f64]) -> Result<()> {
        self.tree.set_evidence(leaf, likelihood.to_vec())?;
        self.state = propagate_all(&self.tree, &self.ops);
        Ok(())
    }

    fn belief(&self, node: NodeId) -> Result<Vec<f64>> {
        if !self.tree.contains(node) {
            return Err(Error::Lookup(format!("unknown node {node}")));
        }
        let node = self.tree.resolve(node);
        match &self.state {
            Ok(p) => Ok(p.belief[node.index()].clone()),
            Err(e) => Err(e.clone()),
        }
    }

    fn counts(&self) -> OpCounts {
        self.ops.snapshot()
    }
}
