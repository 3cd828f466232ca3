//! The contraction hierarchy `T_0, T_1, …, T_top`.
//!
//! Each pass lists the leaves of the current tree in in-order, drops the two
//! extreme ones and any whose parent is the root, and rakes every other
//! leaf of what remains. Raking leaf `e` with parent `x` and grandparent `u`
//! removes `e` and `x`, moves `x`'s other child `z` into `x`'s slot, and
//! replaces `u`'s matrix toward `x` with
//!
//! ```text
//! outer · diag(toward_leaf · λ(e)) · toward_rest
//! ```
//!
//! where `outer` is that old matrix and `toward_leaf`, `toward_rest` are
//! `x`'s matrices toward `e` and `z`. A rake is skipped when one of its
//! three input matrices was itself produced earlier in the same pass, so
//! every recipe reads only level-`i` matrices and every matrix feeds at most
//! one recipe.
//!
//! Matrices live in one arena indexed by [`MatId`]. A matrix that survives a
//! pass untouched keeps its id, so carry-overs are shared, not copied.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{rescale_if_tiny, EdgeMatrix, Matrix, OpCounter, OpCounts};
use crate::tree::{CausalTree, NodeId, NodeKind, TreeBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Edge to the left child.
    A,
    /// Edge to the right child.
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    fn pick<T: Copy>(self, pair: (T, T)) -> T {
        match self {
            Side::A => pair.0,
            Side::B => pair.1,
        }
    }

    fn letter(self) -> char {
        match self {
            Side::A => 'A',
            Side::B => 'B',
        }
    }
}

/// How one derived matrix is computed. Inputs are level-`level`
/// matrices; the target exists from level `level + 1` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Recipe {
    pub level: usize,
    /// The grandparent `u` whose matrix is replaced.
    pub node: NodeId,
    pub side: Side,
    pub target: MatId,
    pub outer: MatId,
    pub toward_leaf: MatId,
    pub toward_rest: MatId,
    pub leaf: NodeId,
    /// The raked leaf's parent, gone from level `level + 1` on.
    pub removed: NodeId,
    /// Side of `leaf` under `removed`.
    pub leaf_side: Side,
}

pub type RecipeId = usize;

/// Links of one node, valid from `from_level` until the next version.
#[derive(Clone, Copy, Debug)]
struct Link {
    from_level: usize,
    parent: Option<NodeId>,
    children: Option<(NodeId, NodeId)>,
    mats: Option<(MatId, MatId)>,
}

/// Statistics of one contraction pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PassReport {
    pub level: usize,
    pub leaves_before: usize,
    pub eligible: usize,
    pub raked: usize,
    /// Candidates left alone because an input was produced in this pass.
    pub skipped: usize,
}

impl PassReport {
    pub fn leaves_after(&self) -> usize {
        self.leaves_before - self.raked
    }

    /// `leaves_after / leaves_before`; exact halving gives about 0.5.
    pub fn ratio(&self) -> f64 {
        self.leaves_after() as f64 / self.leaves_before as f64
    }
}

#[derive(Clone, Debug)]
pub struct ContractionHierarchy<M = Matrix> {
    root: NodeId,
    prior: Vec<f64>,
    links: Vec<Vec<Link>>,
    ind: Vec<usize>,
    top: usize,
    mats: Vec<M>,
    base_mats: usize,
    recipes: Vec<Recipe>,
    successor: Vec<Option<RecipeId>>,
    leaf_recipe: Vec<Option<RecipeId>>,
    slots: Vec<Vec<f64>>,
    is_leaf: Vec<bool>,
    passes: Vec<PassReport>,
    build_ops: OpCounts,
}

/// Mutable copy of the current level used while building.
struct Work {
    parent: Vec<Option<NodeId>>,
    children: Vec<Option<(NodeId, NodeId)>>,
    mats: Vec<Option<(MatId, MatId)>>,
}

impl<M: EdgeMatrix> ContractionHierarchy<M> {
    /// Contracts `tree` down to a root with two leaves, using the tree's
    /// current evidence for the leaf likelihoods.
    pub fn build(tree: &CausalTree<M>) -> Result<Self> {
        let ops = OpCounter::new();
        let n = tree.len();
        for x in tree.ids() {
            let c = tree.children(x).len();
            if c != 0 && c != 2 {
                return Err(Error::Structure(format!("node {} has {c} children; binarize first", tree.label(x))));
            }
        }
        let mut h = ContractionHierarchy {
            root: tree.root(),
            prior: tree.prior().to_vec(),
            links: Vec::with_capacity(n),
            ind: vec![usize::MAX; n],
            top: 0,
            mats: Vec::with_capacity(2 * n),
            base_mats: 0,
            recipes: Vec::new(),
            successor: Vec::new(),
            leaf_recipe: vec![None; n],
            slots: vec![Vec::new(); n],
            is_leaf: vec![false; n],
            passes: Vec::new(),
            build_ops: OpCounts::default(),
        };
        let mut work = Work { parent: vec![None; n], children: vec![None; n], mats: vec![None; n] };
        for x in tree.ids() {
            work.parent[x.index()] = tree.parent(x);
            if let Some((l, r)) = tree.pair(x) {
                let a = h.push_mat(tree.edge(l).expect("edge").clone());
                let b = h.push_mat(tree.edge(r).expect("edge").clone());
                work.children[x.index()] = Some((l, r));
                work.mats[x.index()] = Some((a, b));
            } else {
                let mut s = tree.likelihood(x).into_owned();
                rescale_if_tiny(&mut s);
                h.slots[x.index()] = s;
                h.is_leaf[x.index()] = true;
            }
            h.links.push(vec![Link {
                from_level: 0,
                parent: work.parent[x.index()],
                children: work.children[x.index()],
                mats: work.mats[x.index()],
            }]);
        }
        h.base_mats = h.mats.len();
        h.successor = vec![None; h.mats.len()];

        let mut level = 0;
        while let Some(report) = h.contract_pass(&mut work, level, &ops) {
            h.passes.push(report);
            level += 1;
        }
        h.top = level;
        for i in h.ind.iter_mut().filter(|i| **i == usize::MAX) {
            *i = level;
        }
        h.build_ops = ops.snapshot();
        Ok(h)
    }

    fn push_mat(&mut self, m: M) -> MatId {
        self.mats.push(m);
        MatId(self.mats.len() - 1)
    }

    fn in_order_leaves(&self, work: &Work) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            match work.children[x.index()] {
                None => out.push(x),
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out
    }

    /// One CONTRACT step from level `level` to `level + 1`. `None` once fewer
    /// than three leaves remain.
    fn contract_pass(&mut self, work: &mut Work, level: usize, ops: &OpCounter) -> Option<PassReport> {
        let leaves = self.in_order_leaves(work);
        if leaves.len() < 3 {
            return None;
        }
        let eligible: Vec<NodeId> = leaves[1..leaves.len() - 1]
            .iter()
            .copied()
            .filter(|e| work.parent[e.index()] != Some(self.root))
            .collect();
        let first_fresh = self.mats.len();
        let fresh = |m: MatId| m.0 >= first_fresh;
        let mut report = PassReport { level, leaves_before: leaves.len(), eligible: eligible.len(), raked: 0, skipped: 0 };
        for &e in eligible.iter().step_by(2) {
            let x = work.parent[e.index()].expect("leaf below root");
            let Some(u) = work.parent[x.index()] else {
                report.skipped += 1;
                continue;
            };
            let (xl, xr) = work.children[x.index()].unwrap();
            let leaf_side = if xl == e { Side::A } else { Side::B };
            let z = leaf_side.other().pick((xl, xr));
            let xm = work.mats[x.index()].unwrap();
            let (ul, _) = work.children[u.index()].unwrap();
            let side = if ul == x { Side::A } else { Side::B };
            let um = work.mats[u.index()].unwrap();
            let outer = side.pick(um);
            let toward_leaf = leaf_side.pick(xm);
            let toward_rest = leaf_side.other().pick(xm);
            if fresh(outer) || fresh(toward_leaf) || fresh(toward_rest) {
                report.skipped += 1;
                continue;
            }
            let m = M::rake(&self.mats[outer.0], &self.mats[toward_leaf.0], &self.mats[toward_rest.0], &self.slots[e.index()], ops);
            let target = self.push_mat(m);
            self.successor.push(None);
            let id = self.recipes.len();
            self.recipes.push(Recipe { level, node: u, side, target, outer, toward_leaf, toward_rest, leaf: e, removed: x, leaf_side });
            for input in [outer, toward_leaf, toward_rest] {
                debug_assert!(self.successor[input.0].is_none());
                self.successor[input.0] = Some(id);
            }
            self.leaf_recipe[e.index()] = Some(id);
            self.ind[e.index()] = level;
            self.ind[x.index()] = level;

            // z takes x's place under u
            let mut uc = work.children[u.index()].unwrap();
            let mut umats = um;
            match side {
                Side::A => {
                    uc.0 = z;
                    umats.0 = target;
                }
                Side::B => {
                    uc.1 = z;
                    umats.1 = target;
                }
            }
            work.children[u.index()] = Some(uc);
            work.mats[u.index()] = Some(umats);
            work.parent[z.index()] = Some(u);
            work.parent[x.index()] = None;
            work.parent[e.index()] = None;
            work.children[x.index()] = None;
            self.set_link(u, level + 1, work);
            self.set_link(z, level + 1, work);
            report.raked += 1;
        }
        Some(report)
    }

    fn set_link(&mut self, x: NodeId, from_level: usize, work: &Work) {
        let link = Link {
            from_level,
            parent: work.parent[x.index()],
            children: work.children[x.index()],
            mats: work.mats[x.index()],
        };
        let versions = &mut self.links[x.index()];
        if versions.last().is_some_and(|v| v.from_level == from_level) {
            *versions.last_mut().unwrap() = link;
        } else {
            versions.push(link);
        }
    }

    fn link_at(&self, x: NodeId, level: usize) -> &Link {
        let versions = &self.links[x.index()];
        let i = versions.partition_point(|v| v.from_level <= level);
        &versions[i - 1]
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Highest level at which `x` is present.
    pub fn ind(&self, x: NodeId) -> usize {
        self.ind[x.index()]
    }

    pub fn top_level(&self) -> usize {
        self.top
    }

    pub fn level_count(&self) -> usize {
        self.top + 1
    }

    pub fn contains_at(&self, x: NodeId, level: usize) -> bool {
        level <= self.ind[x.index()]
    }

    pub fn is_leaf(&self, x: NodeId) -> bool {
        self.is_leaf[x.index()]
    }

    pub fn parent_at(&self, x: NodeId, level: usize) -> Option<NodeId> {
        self.link_at(x, level).parent
    }

    pub fn children_at(&self, x: NodeId, level: usize) -> Option<(NodeId, NodeId)> {
        self.link_at(x, level).children
    }

    /// Ids of `x`'s (A, B) matrices at `level`.
    pub fn mats_at(&self, x: NodeId, level: usize) -> Option<(MatId, MatId)> {
        self.link_at(x, level).mats
    }

    pub fn matrix(&self, id: MatId) -> &M {
        &self.mats[id.0]
    }

    pub fn matrix_at(&self, x: NodeId, side: Side, level: usize) -> Option<&M> {
        self.mats_at(x, level).map(|m| &self.mats[side.pick(m).0])
    }

    /// Every stored matrix, level-0 ones first.
    pub fn matrices(&self) -> &[M] {
        &self.mats
    }

    pub fn base_matrix_count(&self) -> usize {
        self.base_mats
    }

    /// Matrices created by rakes.
    pub fn fresh_matrix_count(&self) -> usize {
        self.mats.len() - self.base_mats
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    pub fn recipe(&self, id: RecipeId) -> &Recipe {
        &self.recipes[id]
    }

    /// The recipe reading matrix `id`, if any.
    pub fn successor(&self, id: MatId) -> Option<RecipeId> {
        self.successor[id.0]
    }

    /// The recipe reading leaf `e`'s likelihood, if `e` was raked.
    pub fn leaf_recipe(&self, e: NodeId) -> Option<RecipeId> {
        self.leaf_recipe[e.index()]
    }

    pub fn passes(&self) -> &[PassReport] {
        &self.passes
    }

    /// Matrix work spent by [`ContractionHierarchy::build`].
    pub fn build_counts(&self) -> OpCounts {
        self.build_ops
    }

    pub fn slot(&self, leaf: NodeId) -> &[f64] {
        &self.slots[leaf.index()]
    }

    /// Nodes of `T_level`, root first.
    pub fn nodes_at(&self, level: usize) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            out.push(x);
            if let Some((l, r)) = self.children_at(x, level) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    /// Leaves of `T_level` in in-order.
    pub fn leaves_at(&self, level: usize) -> Vec<NodeId> {
        self.nodes_at(level).into_iter().filter(|&x| self.children_at(x, level).is_none()).collect()
    }

    pub(crate) fn set_slot(&mut self, leaf: NodeId, mut likelihood: Vec<f64>) {
        rescale_if_tiny(&mut likelihood);
        self.slots[leaf.index()] = likelihood;
    }

    /// Re-evaluates recipe `id` from its current inputs.
    pub(crate) fn recompute(&mut self, id: RecipeId, ops: &OpCounter) -> MatId {
        let r = self.recipes[id];
        let m = M::rake(&self.mats[r.outer.0], &self.mats[r.toward_leaf.0], &self.mats[r.toward_rest.0], &self.slots[r.leaf.index()], ops);
        self.mats[r.target.0] = m;
        r.target
    }

    /// `T_level` as a standalone tree. Node labels and names are kept; edge
    /// matrices are the level's (generally not stochastic) A/B matrices.
    pub fn level_tree(&self, source: &CausalTree<M>, level: usize) -> Result<CausalTree<M>> {
        let mut b = TreeBuilder::new(source.dim());
        let nodes = self.nodes_at(level);
        let mut map = vec![None; self.len()];
        for &x in &nodes {
            let id = b.add_node_with_kind(source.label(x), source.name(x), source.kind(x))?;
            map[x.index()] = Some(id);
        }
        for &x in &nodes {
            let nx = map[x.index()].unwrap();
            match self.children_at(x, level) {
                Some((l, r)) => {
                    let (a, bm) = self.mats_at(x, level).unwrap();
                    b.add_edge(nx, map[l.index()].unwrap(), self.mats[a.0].clone())?;
                    b.add_edge(nx, map[r.index()].unwrap(), self.mats[bm.0].clone())?;
                }
                None => {
                    if source.kind(x) != NodeKind::Dummy {
                        b.set_likelihood(nx, self.slots[x.index()].clone())?;
                    }
                }
            }
        }
        b.set_root(map[self.root.index()].unwrap())?;
        b.set_prior(self.prior.clone())?;
        b.into_tree_unchecked()
    }

    /// Structural self-check. Empty when every invariant holds.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut readers = vec![0usize; self.mats.len()];
        let mut leaf_readers = vec![0usize; self.len()];
        let mut made_at = vec![0usize; self.mats.len()];
        for r in &self.recipes {
            made_at[r.target.0] = r.level + 1;
        }
        for (id, r) in self.recipes.iter().enumerate() {
            for m in [r.outer, r.toward_leaf, r.toward_rest] {
                readers[m.0] += 1;
                if made_at[m.0] > r.level {
                    problems.push(format!("recipe {id} reads a matrix produced at its own level"));
                }
            }
            leaf_readers[r.leaf.index()] += 1;
        }
        for (m, &c) in readers.iter().enumerate() {
            if c > 1 {
                problems.push(format!("matrix {m} feeds {c} recipes"));
            }
        }
        for (x, &c) in leaf_readers.iter().enumerate() {
            if c > 1 {
                problems.push(format!("leaf {x} feeds {c} recipes"));
            }
        }
        let top = self.nodes_at(self.top);
        if self.len() >= 3 && top.len() != 3 {
            problems.push(format!("top level has {} nodes", top.len()));
        }
        let mut present = vec![false; self.len()];
        for x in self.nodes_at(0) {
            present[x.index()] = true;
        }
        for i in 0..=self.top {
            let next: Vec<NodeId> = if i < self.top { self.nodes_at(i + 1) } else { Vec::new() };
            let mut next_present = vec![false; self.len()];
            for &x in &next {
                if !present[x.index()] {
                    problems.push(format!("level {} is not a subset of level {i}", i + 1));
                }
                next_present[x.index()] = true;
            }
            for x in 0..self.len() {
                let expect_here = self.ind[x] >= i;
                if present[x] != expect_here || (present[x] && next_present[x] != (self.ind[x] > i)) {
                    problems.push(format!("ind of node {x} is wrong at level {i}"));
                }
            }
            if i < self.top {
                let (l0, l1) = (self.leaves_at(i), self.leaves_at(i + 1));
                if l0.first() != l1.first() || l0.last() != l1.last() {
                    problems.push(format!("extreme leaves changed between levels {i} and {}", i + 1));
                }
            }
            present = next_present;
        }
        problems
    }

    /// Name of a matrix as seen at `level`, e.g. `B1(x3)`.
    fn mat_name(&self, tree: &CausalTree<M>, node: NodeId, side: Side, level: usize) -> String {
        format!("{}{}({})", side.letter(), level, tree.name(node))
    }

    /// Per-level node sets followed by one line per recipe:
    /// `level target <- inputs...`.
    pub fn dump(&self, tree: &CausalTree<M>) -> String {
        let mut out = String::new();
        for i in 0..=self.top {
            let names: Vec<&str> = self.nodes_at(i).into_iter().map(|x| tree.name(x)).collect();
            let _ = writeln!(out, "T{i} = {{{}}}", names.join(", "));
        }
        for r in &self.recipes {
            let _ = writeln!(
                out,
                "{} {} <- {} {} lambda({}) {}",
                r.level + 1,
                self.mat_name(tree, r.node, r.side, r.level + 1),
                self.mat_name(tree, r.node, r.side, r.level),
                self.mat_name(tree, r.removed, r.leaf_side, r.level),
                tree.name(r.leaf),
                self.mat_name(tree, r.removed, r.leaf_side.other(), r.level),
            );
        }
        out
    }

    /// The recipe's target written as in [`ContractionHierarchy::dump`].
    pub fn target_name(&self, tree: &CausalTree<M>, id: RecipeId) -> String {
        let r = &self.recipes[id];
        self.mat_name(tree, r.node, r.side, r.level + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::lambda_all;
    use crate::gen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(tree: &CausalTree, ids: &[NodeId]) -> Vec<String> {
        let mut v: Vec<String> = ids.iter().map(|&x| tree.name(x).to_string()).collect();
        v.sort();
        v
    }

    fn golden() -> (CausalTree, ContractionHierarchy) {
        let t = gen::chain(4, 2, &mut ChaCha8Rng::seed_from_u64(0));
        let h = ContractionHierarchy::build(&t).unwrap();
        (t, h)
    }

    #[test]
    fn chain_of_four_levels() {
        let (t, h) = golden();
        assert_eq!(h.level_count(), 3);
        assert_eq!(names(&t, &h.nodes_at(1)), ["e1", "e3", "e5", "x1", "x3"]);
        assert_eq!(names(&t, &h.nodes_at(2)), ["e1", "e5", "x1"]);
        let raked: Vec<&str> = h.recipes().iter().map(|r| t.name(r.leaf)).collect();
        assert_eq!(raked, ["e2", "e4", "e3"]);
        let dump = h.dump(&t);
        assert!(dump.contains("1 B1(x1) <- B0(x1) A0(x2) lambda(e2) B0(x2)\n"));
        assert!(dump.contains("1 B1(x3) <- B0(x3) A0(x4) lambda(e4) B0(x4)\n"));
        assert!(dump.contains("2 B2(x1) <- B1(x1) A1(x3) lambda(e3) B1(x3)\n"));
        let x1 = t.find_name("x1").unwrap();
        let x2 = t.find_name("x2").unwrap();
        assert_eq!(h.ind(x1), 2);
        assert_eq!(h.ind(x2), 0);
        assert_eq!(h.ind(t.find_name("x3").unwrap()), 1);
        // A matrices are carried over untouched
        assert_eq!(h.mats_at(x1, 0).unwrap().0, h.mats_at(x1, 2).unwrap().0);
        assert!(h.audit().is_empty(), "{:?}", h.audit());
    }

    #[test]
    fn rake_matches_hand_product() {
        let (t, h) = golden();
        let r = h.recipes()[0];
        let b0 = t.edge(t.find_name("x2").unwrap()).unwrap();
        let a0x2 = t.edge(t.find_name("e2").unwrap()).unwrap();
        let b0x2 = t.edge(t.find_name("x3").unwrap()).unwrap();
        let d = crate::linalg::apply(a0x2, &[1.0, 1.0]).unwrap();
        let mut want = [[0.0; 2]; 2];
        for (i, row) in want.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                for m in 0..2 {
                    *w += b0.get(i, m) * d[m] * b0x2.get(m, j);
                }
            }
        }
        let got = h.matrix(r.target);
        for i in 0..2 {
            for j in 0..2 {
                assert!((got.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_rakes_stay_identity() {
        let mut b = TreeBuilder::new(3);
        let xs: Vec<_> = (0..6).map(|i| b.add_variable(format!("x{i}"))).collect();
        let es: Vec<_> = (0..7).map(|i| b.add_variable(format!("e{i}"))).collect();
        for j in 0..6 {
            b.add_edge(xs[j], es[j], Matrix::identity(3)).unwrap();
            let next = if j + 1 < 6 { xs[j + 1] } else { es[6] };
            b.add_edge(xs[j], next, Matrix::identity(3)).unwrap();
        }
        b.set_prior(vec![0.2, 0.3, 0.5]).unwrap();
        let t = b.binarize().unwrap();
        let h = ContractionHierarchy::build(&t).unwrap();
        for m in h.matrices() {
            assert!(m.bit_eq(&Matrix::identity(3)));
        }
    }

    #[test]
    fn small_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = gen::random_binary(&mut rng, 2, 2);
        let h = ContractionHierarchy::build(&t).unwrap();
        assert_eq!((h.level_count(), h.recipes().len()), (1, 0));
        let t = gen::random_binary(&mut rng, 1, 2);
        let h = ContractionHierarchy::build(&t).unwrap();
        assert_eq!((h.level_count(), h.recipes().len(), h.len()), (1, 0, 1));
        let t = gen::random_binary(&mut rng, 3, 2);
        let h = ContractionHierarchy::build(&t).unwrap();
        assert_eq!((h.level_count(), h.recipes().len()), (2, 1));
    }

    #[test]
    fn balanced_eight_leaves() {
        let t = gen::balanced(8, 2, &mut ChaCha8Rng::seed_from_u64(4));
        let h = ContractionHierarchy::build(&t).unwrap();
        assert!(h.passes().iter().all(|p| p.raked >= 1));
        assert!(h.passes()[0].raked >= 2);
        assert!(h.passes().len() <= 12);
        assert_eq!(h.nodes_at(h.top_level()).len(), 3);
    }

    #[test]
    fn structure_bounds_on_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for case in 0..60 {
            let leaves = 3 + case * 37;
            let t = match case % 3 {
                0 => gen::random_binary(&mut rng, leaves, 2),
                1 => gen::chain(leaves - 1, 2, &mut rng),
                _ => gen::balanced(leaves, 2, &mut rng),
            };
            let h = ContractionHierarchy::build(&t).unwrap();
            let bound = 4 * (leaves as f64).log2().ceil() as usize + 2;
            assert!(h.level_count() <= bound, "case {case}: {} levels", h.level_count());
            assert!(h.fresh_matrix_count() <= 2 * (t.len() - 1));
            assert_eq!(h.fresh_matrix_count(), leaves - 2);
            assert!(h.build_counts().mat_mat <= 2 * leaves as u64);
            assert!(h.audit().is_empty(), "case {case}: {:?}", h.audit());
        }
    }

    #[test]
    fn levels_preserve_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let mut t = gen::random_binary(&mut rng, 25, 3);
            for leaf in t.evidence_leaves() {
                t.set_evidence(leaf, gen::random_likelihood(&mut rng, 3)).unwrap();
            }
            let h = ContractionHierarchy::build(&t).unwrap();
            let base = lambda_all(&t, &OpCounter::new());
            for i in 0..h.level_count() {
                let lt = h.level_tree(&t, i).unwrap();
                let lam = lambda_all(&lt, &OpCounter::new());
                for x in lt.ids() {
                    let orig = t.find(lt.label(x)).unwrap();
                    for (a, b) in lam[x.index()].iter().zip(&base[orig.index()]) {
                        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_unbinarized_input() {
        let mut b = TreeBuilder::new(2);
        let r = b.add_variable("r");
        let c = b.add_variable("c");
        b.add_edge(r, c, Matrix::identity(2)).unwrap();
        b.set_prior(vec![0.5, 0.5]).unwrap();
        let t = b.into_tree_unchecked().unwrap();
        assert!(matches!(ContractionHierarchy::build(&t), Err(Error::Structure(_))));
    }
}
