//! Join trees of cliques, directed away from a root clique so that they form
//! a causal tree over clique values.
//!
//! A clique over `n` variables has `K = k^n` values, encoded mixed-radix with
//! the first listed variable most significant. Cliques smaller than the
//! largest one are padded with dummy variables that are always 0.
//!
//! The conditional of a child clique `C` given its parent `P` only depends
//! on their separator `S`, so it factors as `J · T` with `J` the `K×L`
//! 0/1 projection of `P`'s values onto `S` and `T` the `L×K` table
//! `p(C | S)`, `L = k^|S|`. [`FactoredMatrix`] keeps that form through
//! every rake.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{
    apply_transpose_unchecked, apply_unchecked, matmul_unchecked, rescale_if_tiny, scale_columns_unchecked,
    EdgeMatrix, Matrix, OpCounter,
};
use crate::tree::{CausalTree, NodeId, NodeKind, TreeBuilder};

pub type VarId = usize;

/// Ordered clique members; `None` marks a padding variable fixed at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueNode {
    pub members: Vec<Option<VarId>>,
}

impl CliqueNode {
    pub fn new(vars: &[VarId], width: usize) -> Self {
        let mut members: Vec<Option<VarId>> = vars.iter().copied().map(Some).collect();
        members.resize(width.max(vars.len()), None);
        CliqueNode { members }
    }

    pub fn width(&self) -> usize {
        self.members.len()
    }

    pub fn domain(&self, k: usize) -> usize {
        k.pow(self.members.len() as u32)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.members.iter().flatten().copied()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.members.iter().position(|m| *m == Some(v))
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.position(v).is_some()
    }

    /// Coordinate `pos` of clique value `value`.
    pub fn coord(&self, k: usize, value: usize, pos: usize) -> usize {
        let shift = self.members.len() - 1 - pos;
        (value / k.pow(shift as u32)) % k
    }

    /// Clique value with the given coordinates.
    pub fn encode(&self, k: usize, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * k + c)
    }

    /// Whether every padding coordinate of `value` is 0.
    pub fn is_possible(&self, k: usize, value: usize) -> bool {
        self.members.iter().enumerate().all(|(p, m)| m.is_some() || self.coord(k, value, p) == 0)
    }
}

/// Variables of `child` shared with `parent`, in `child`'s order.
pub fn separator(child: &CliqueNode, parent: &CliqueNode) -> Vec<VarId> {
    child.vars().filter(|&v| parent.contains(v)).collect()
}

/// Index of the separator coordinates of `value`, mixed-radix over `sep`.
fn project(clique: &CliqueNode, k: usize, value: usize, sep: &[VarId]) -> usize {
    sep.iter().fold(0, |acc, &v| acc * k + clique.coord(k, value, clique.position(v).unwrap()))
}

/// The `K×L` 0/1 matrix sending each value of `clique` to its projection
/// onto `sep`.
pub fn projection_matrix(clique: &CliqueNode, sep: &[VarId], k: usize) -> Result<Matrix> {
    if let Some(v) = sep.iter().find(|&&v| !clique.contains(v)) {
        return Err(Error::Structure(format!("variable {v} is not in the clique")));
    }
    let kk = clique.domain(k);
    let l = k.pow(sep.len() as u32);
    let mut m = Matrix::zeros(kk, l);
    for r in 0..kk {
        m.set(r, project(clique, k, r, sep), 1.0);
    }
    Ok(m)
}

/// `J · table` for the edge `parent → child`; `table` is `L×K`, rows indexed
/// by separator values.
pub fn build_projection(child: &CliqueNode, parent: &CliqueNode, table: Matrix, k: usize) -> Result<FactoredMatrix> {
    let sep = separator(child, parent);
    let j = projection_matrix(parent, &sep, k)?;
    if table.rows() != j.cols() || table.cols() != child.domain(k) {
        return Err(Error::Dimension { expected: j.cols() * child.domain(k), found: table.rows() * table.cols() });
    }
    Ok(FactoredMatrix::new(j, table))
}

/// Lifts a likelihood over `var` to the clique's `K` values.
pub fn clique_evidence(clique: &CliqueNode, var: VarId, likelihood: &[f64], k: usize) -> Result<Vec<f64>> {
    let pos = clique.position(var).ok_or_else(|| Error::Lookup(format!("variable {var} is not in the clique")))?;
    if likelihood.len() != k {
        return Err(Error::Dimension { expected: k, found: likelihood.len() });
    }
    Ok((0..clique.domain(k)).map(|v| likelihood[clique.coord(k, v, pos)]).collect())
}

/// Sums a clique belief down to one member variable.
pub fn marginalize(belief: &[f64], clique: &CliqueNode, var: VarId, k: usize) -> Result<Vec<f64>> {
    let pos = clique.position(var).ok_or_else(|| Error::Lookup(format!("variable {var} is not in the clique")))?;
    let mut out = vec![0.0; k];
    for (v, b) in belief.iter().enumerate() {
        out[clique.coord(k, v, pos)] += b;
    }
    crate::linalg::normalize(&out)
}

/// `left · right` with `left` `K×L` and `right` `L×K`.
#[derive(Clone, Debug)]
pub struct FactoredMatrix {
    left: Matrix,
    right: Matrix,
    /// `left` is the identity, so products with it are skipped.
    plain: bool,
}

impl FactoredMatrix {
    pub fn new(left: Matrix, right: Matrix) -> Self {
        assert_eq!(left.cols(), right.rows(), "factor shapes");
        let plain = left.bit_eq(&Matrix::identity(left.rows()));
        FactoredMatrix { left, right, plain }
    }

    pub fn left(&self) -> &Matrix {
        &self.left
    }

    pub fn right(&self) -> &Matrix {
        &self.right
    }

    /// Inner dimension `L`.
    pub fn inner(&self) -> usize {
        self.left.cols()
    }
}

impl EdgeMatrix for FactoredMatrix {
    fn rows(&self) -> usize {
        self.left.rows()
    }

    fn cols(&self) -> usize {
        self.right.cols()
    }

    fn identity(n: usize) -> Self {
        FactoredMatrix::new(Matrix::identity(n), Matrix::identity(n))
    }

    fn vacuous(n: usize) -> Self {
        let mut delta = Matrix::zeros(1, n);
        delta.set(0, 0, 1.0);
        FactoredMatrix::new(Matrix::from_fn(n, 1, |_, _| 1.0), delta)
    }

    fn apply(&self, v: &[f64], ops: &OpCounter) -> Vec<f64> {
        ops.mat_vec(self.right.rows() * self.right.cols());
        let t = apply_unchecked(&self.right, v);
        if self.plain {
            return t;
        }
        ops.mat_vec(self.left.rows() * self.left.cols());
        apply_unchecked(&self.left, &t)
    }

    fn apply_transpose(&self, v: &[f64], ops: &OpCounter) -> Vec<f64> {
        let t = if self.plain {
            v.to_vec()
        } else {
            ops.mat_vec(self.left.rows() * self.left.cols());
            apply_transpose_unchecked(&self.left, v)
        };
        ops.mat_vec(self.right.rows() * self.right.cols());
        apply_transpose_unchecked(&self.right, &t)
    }

    /// `outer.left · [(outer.right · diag(toward_leaf · λ)) · toward_rest.left] · toward_rest.right`,
    /// keeping `outer.left` as the new left factor.
    fn rake(outer: &Self, toward_leaf: &Self, toward_rest: &Self, leaf: &[f64], ops: &OpCounter) -> Self {
        let d = toward_leaf.apply(leaf, ops);
        ops.flops(outer.right.rows() * outer.right.cols());
        let scaled = scale_columns_unchecked(&outer.right, &d);
        let inner = if toward_rest.plain {
            scaled
        } else {
            ops.mat_mat(scaled.rows() * scaled.cols() * toward_rest.left.cols());
            matmul_unchecked(&scaled, &toward_rest.left)
        };
        ops.mat_mat(inner.rows() * inner.cols() * toward_rest.right.cols());
        let mut right = matmul_unchecked(&inner, &toward_rest.right);
        right.rescale_if_tiny();
        FactoredMatrix { left: outer.left.clone(), right, plain: outer.plain }
    }

    fn to_dense(&self) -> Matrix {
        matmul_unchecked(&self.left, &self.right)
    }

    fn bit_eq(&self, other: &Self) -> bool {
        self.left.bit_eq(&other.left) && self.right.bit_eq(&other.right)
    }
}

/// Edge storage that can be assembled from the two join-tree factors.
pub trait JoinEdge: EdgeMatrix {
    fn from_factors(left: Matrix, right: Matrix) -> Self;
}

impl JoinEdge for FactoredMatrix {
    fn from_factors(left: Matrix, right: Matrix) -> Self {
        FactoredMatrix::new(left, right)
    }
}

impl JoinEdge for Matrix {
    fn from_factors(left: Matrix, right: Matrix) -> Self {
        matmul_unchecked(&left, &right)
    }
}

/// An undirected-by-construction join tree given with a root and the
/// conditional tables along each edge.
#[derive(Clone, Debug)]
pub struct JoinTree {
    k: usize,
    width: usize,
    var_names: Vec<String>,
    cliques: Vec<CliqueNode>,
    parent: Vec<Option<usize>>,
    /// `p(C | S)` on the padded domain, `L×K`; `None` at the root.
    tables: Vec<Option<Matrix>>,
    /// Root clique distribution on the padded domain.
    prior: Vec<f64>,
    home: Vec<usize>,
}

impl JoinTree {
    /// `cliques[i]` lists its variables; `tables[i]` is `p(C_i | S_i)` as an
    /// `L×k^|C_i|` matrix over the unpadded clique domain (ignored for the
    /// root); `prior` is the root clique distribution over its unpadded
    /// domain. Each variable is queried at the first clique containing it
    /// unless `home` says otherwise.
    pub fn new(
        k: usize,
        var_names: Vec<String>,
        cliques: Vec<Vec<VarId>>,
        parent: Vec<Option<usize>>,
        tables: Vec<Option<Matrix>>,
        prior: Vec<f64>,
        home: Option<Vec<usize>>,
    ) -> Result<Self> {
        let m = cliques.len();
        if m == 0 {
            return Err(Error::Structure("join tree without cliques".into()));
        }
        if parent.len() != m || tables.len() != m {
            return Err(Error::Structure("clique, parent and table counts differ".into()));
        }
        let nvars = var_names.len();
        for c in &cliques {
            let mut seen = c.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != c.len() || c.iter().any(|&v| v >= nvars) || c.is_empty() {
                return Err(Error::Structure(format!("bad clique {c:?}")));
            }
        }
        let roots: Vec<usize> = (0..m).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Structure(format!("expected one root clique, found {}", roots.len())));
        }
        let root = roots[0];
        // every clique reaches the root without revisiting
        for start in 0..m {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent[cur] {
                if p >= m {
                    return Err(Error::Structure(format!("clique {cur} has unknown parent {p}")));
                }
                cur = p;
                steps += 1;
                if steps > m {
                    return Err(Error::Structure("cycle among cliques".into()));
                }
            }
        }
        // running intersection: the cliques holding a variable are connected
        for v in 0..nvars {
            let holders = (0..m).filter(|&i| cliques[i].contains(&v)).count();
            let links = (0..m).filter(|&i| cliques[i].contains(&v) && parent[i].is_some_and(|p| cliques[p].contains(&v))).count();
            if holders == 0 {
                return Err(Error::Structure(format!("variable {} is in no clique", var_names[v])));
            }
            if holders != links + 1 {
                return Err(Error::Structure(format!("cliques containing {} are not connected", var_names[v])));
            }
        }
        let width = cliques.iter().map(Vec::len).max().unwrap();
        let nodes: Vec<CliqueNode> = cliques.iter().map(|c| CliqueNode::new(c, width)).collect();
        let mut padded = Vec::with_capacity(m);
        for i in 0..m {
            if i == root {
                padded.push(None);
                continue;
            }
            let p = parent[i].unwrap();
            let sep = separator(&nodes[i], &nodes[p]);
            let table = tables[i].as_ref().ok_or_else(|| Error::Structure(format!("clique {i} has no table")))?;
            let (l, small) = (k.pow(sep.len() as u32), k.pow(cliques[i].len() as u32));
            if table.rows() != l || table.cols() != small {
                return Err(Error::Dimension { expected: l * small, found: table.rows() * table.cols() });
            }
            if !table.is_row_stochastic(crate::linalg::STOCHASTIC_TOL) {
                return Err(Error::Invalid(format!("table of clique {i} is not row-stochastic")));
            }
            let bare = CliqueNode::new(&cliques[i], 0);
            for r in 0..l {
                for c in 0..small {
                    if table.get(r, c) != 0.0 && project(&bare, k, c, &sep) != r {
                        return Err(Error::Invalid(format!("table of clique {i} puts mass on values off its separator row")));
                    }
                }
            }
            padded.push(Some(pad_columns(table, k, width - cliques[i].len())));
        }
        if prior.len() != k.pow(cliques[root].len() as u32) {
            return Err(Error::Dimension { expected: k.pow(cliques[root].len() as u32), found: prior.len() });
        }
        let prior = pad_columns(&Matrix::new(1, prior.len(), prior)?, k, width - cliques[root].len()).row(0).to_vec();
        let home = match home {
            Some(h) => {
                if h.len() != nvars || h.iter().enumerate().any(|(v, &c)| c >= m || !cliques[c].contains(&v)) {
                    return Err(Error::Structure("bad home clique assignment".into()));
                }
                h
            }
            None => (0..nvars).map(|v| (0..m).find(|&i| cliques[i].contains(&v)).unwrap()).collect(),
        };
        Ok(JoinTree { k, width, var_names, cliques: nodes, parent, tables: padded, prior, home })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Clique size `n` after padding.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn domain(&self) -> usize {
        self.k.pow(self.width as u32)
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v]
    }

    pub fn cliques(&self) -> &[CliqueNode] {
        &self.cliques
    }

    pub fn parent(&self, c: usize) -> Option<usize> {
        self.parent[c]
    }

    pub fn home(&self, v: VarId) -> usize {
        self.home[v]
    }

    pub fn root(&self) -> usize {
        self.parent.iter().position(Option::is_none).unwrap()
    }

    fn unpad(&self, m: &Matrix, members: usize) -> Matrix {
        let stride = self.k.pow((self.width - members) as u32);
        Matrix::from_fn(m.rows(), self.k.pow(members as u32), |r, c| m.get(r, c * stride))
    }

    /// `p(C_i | S_i)` over the unpadded clique domain, as given.
    pub fn table(&self, i: usize) -> Option<Matrix> {
        let members = self.cliques[i].vars().count();
        self.tables[i].as_ref().map(|t| self.unpad(t, members))
    }

    /// Root clique distribution over its unpadded domain.
    pub fn prior(&self) -> Vec<f64> {
        let root = self.root();
        let members = self.cliques[root].vars().count();
        let m = Matrix::new(1, self.prior.len(), self.prior.clone()).unwrap();
        self.unpad(&m, members).row(0).to_vec()
    }

    /// Largest separator size `c`.
    pub fn max_separator(&self) -> usize {
        (0..self.cliques.len())
            .filter_map(|i| self.parent[i].map(|p| separator(&self.cliques[i], &self.cliques[p]).len()))
            .max()
            .unwrap_or(0)
    }

    /// Directs and binarizes the tree and gives every variable an evidence
    /// leaf under its home clique.
    pub fn directed<M: JoinEdge>(&self) -> Result<DirectedJoinTree<M>> {
        let k = self.k;
        let kk = self.domain();
        let m = self.cliques.len();
        let mut b: TreeBuilder<M> = TreeBuilder::new(kk);
        let clique_node: Vec<NodeId> = (0..m).map(|i| b.add_variable(format!("C{i}"))).collect();
        let evidence_leaf: Vec<NodeId> =
            (0..self.var_count()).map(|v| b.add_variable(format!("e:{}", self.var_names[v]))).collect();
        let leaf_clique = |v: VarId| CliqueNode::new(&[v], self.width);

        struct Kid {
            node: NodeId,
            sep: Vec<VarId>,
            right: Matrix,
        }
        let mut kids: Vec<Vec<Kid>> = (0..m).map(|_| Vec::new()).collect();
        for i in 0..m {
            if let Some(p) = self.parent[i] {
                let sep = separator(&self.cliques[i], &self.cliques[p]);
                kids[p].push(Kid {
                    node: clique_node[i],
                    sep,
                    right: self.tables[i].clone().unwrap(),
                });
            }
        }
        for v in 0..self.var_count() {
            let shape = leaf_clique(v);
            let mut right = Matrix::zeros(k, kk);
            for s in 0..k {
                let mut coords = vec![0; self.width];
                coords[0] = s;
                right.set(s, shape.encode(k, &coords), 1.0);
            }
            kids[self.home[v]].push(Kid { node: evidence_leaf[v], sep: vec![v], right });
        }

        let mut shapes: HashMap<NodeId, CliqueNode> = HashMap::new();
        for (i, &n) in clique_node.iter().enumerate() {
            shapes.insert(n, self.cliques[i].clone());
        }
        for v in 0..self.var_count() {
            shapes.insert(evidence_leaf[v], leaf_clique(v));
        }
        let mut copies = 0;
        for i in 0..m {
            let mut list = std::mem::take(&mut kids[i]);
            list.sort_by(|a, b| a.sep.cmp(&b.sep));
            let mut holder = clique_node[i];
            let mut holder_shape = self.cliques[i].clone();
            let mut rest = &list[..];
            loop {
                match rest.len() {
                    0 => break,
                    1 | 2 => {
                        for kid in rest {
                            let j = projection_matrix(&holder_shape, &kid.sep, k)?;
                            b.add_edge(holder, kid.node, M::from_factors(j, kid.right.clone()))?;
                        }
                        if rest.len() == 1 {
                            let d = b.add_node_with_kind(b.len() as u64, format!("~dummy{}", b.len()), NodeKind::Dummy)?;
                            b.add_edge(holder, d, M::vacuous(kk))?;
                        }
                        break;
                    }
                    _ => {
                        let kid = &rest[0];
                        let j = projection_matrix(&holder_shape, &kid.sep, k)?;
                        b.add_edge(holder, kid.node, M::from_factors(j, kid.right.clone()))?;
                        // the copy keeps only the variables its remaining children need
                        let mut keep: Vec<VarId> = rest[1..].iter().flat_map(|c| c.sep.iter().copied()).collect();
                        keep.sort_unstable();
                        keep.dedup();
                        let members: Vec<Option<VarId>> =
                            holder_shape.members.iter().map(|mv| mv.filter(|v| keep.contains(v))).collect();
                        let shape = CliqueNode { members };
                        let union: Vec<VarId> = shape.vars().collect();
                        let jc = projection_matrix(&holder_shape, &union, k)?;
                        let mut right = Matrix::zeros(jc.cols(), kk);
                        for value in 0..kk {
                            if shape.is_possible(k, value) {
                                right.set(project(&shape, k, value, &union), value, 1.0);
                            }
                        }
                        copies += 1;
                        let copy = b.add_node_with_kind(
                            b.len() as u64,
                            format!("C{i}'{copies}"),
                            NodeKind::Copy { of: clique_node[i] },
                        )?;
                        b.add_edge(holder, copy, M::from_factors(jc, right))?;
                        shapes.insert(copy, shape.clone());
                        holder = copy;
                        holder_shape = shape;
                        rest = &rest[1..];
                    }
                }
            }
        }
        let root = (0..m).find(|&i| self.parent[i].is_none()).unwrap();
        b.set_root(clique_node[root])?;
        b.set_prior(self.prior.clone())?;
        let tree = b.into_tree_unchecked()?;
        let mut shape_vec = vec![CliqueNode { members: vec![] }; tree.len()];
        for (n, s) in shapes {
            shape_vec[n.index()] = s;
        }
        for x in tree.ids() {
            if tree.kind(x) == NodeKind::Dummy {
                shape_vec[x.index()] = CliqueNode::new(&[], self.width);
            }
        }
        Ok(DirectedJoinTree { k, width: self.width, tree, clique_node, evidence_leaf, shapes: shape_vec, home: self.home.clone() })
    }
}

/// Appends `pad` always-zero coordinates to the column index.
fn pad_columns(table: &Matrix, k: usize, pad: usize) -> Matrix {
    let f = k.pow(pad as u32);
    let mut out = Matrix::zeros(table.rows(), table.cols() * f);
    for r in 0..table.rows() {
        for c in 0..table.cols() {
            out.set(r, c * f, table.get(r, c));
        }
    }
    out
}

/// A join tree as a binary causal tree over clique values.
#[derive(Clone, Debug)]
pub struct DirectedJoinTree<M> {
    k: usize,
    width: usize,
    tree: CausalTree<M>,
    clique_node: Vec<NodeId>,
    evidence_leaf: Vec<NodeId>,
    shapes: Vec<CliqueNode>,
    home: Vec<usize>,
}

impl<M: EdgeMatrix> DirectedJoinTree<M> {
    pub fn tree(&self) -> &CausalTree<M> {
        &self.tree
    }

    pub fn into_tree(self) -> CausalTree<M> {
        self.tree
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn clique_node(&self, c: usize) -> NodeId {
        self.clique_node[c]
    }

    pub fn clique_count(&self) -> usize {
        self.clique_node.len()
    }

    pub fn evidence_leaf(&self, v: VarId) -> NodeId {
        self.evidence_leaf[v]
    }

    /// Variables present in a tree node's clique.
    pub fn shape(&self, x: NodeId) -> &CliqueNode {
        &self.shapes[x.index()]
    }

    pub fn home_node(&self, v: VarId) -> NodeId {
        self.clique_node[self.home[v]]
    }

    /// Evidence leaf of `v` and the lifted likelihood to post on it.
    pub fn lift(&self, v: VarId, likelihood: &[f64]) -> Result<(NodeId, Vec<f64>)> {
        let leaf = *self.evidence_leaf.get(v).ok_or_else(|| Error::Lookup(format!("unknown variable {v}")))?;
        Ok((leaf, clique_evidence(&self.shapes[leaf.index()], v, likelihood, self.k)?))
    }

    /// Belief of `v` from the belief of a clique node containing it.
    pub fn marginal(&self, x: NodeId, belief: &[f64], v: VarId) -> Result<Vec<f64>> {
        marginalize(belief, &self.shapes[x.index()], v, self.k)
    }
}

/// Reference oracle: the joint over all variables of a join tree, as
/// `p(root) · Π p(C | S)` enumerated over assignments.
pub fn brute_force_marginals(jt: &JoinTree, evidence: &[Option<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
    let k = jt.k;
    let n = jt.var_count();
    if (k as f64).powi(n as i32) > crate::exact::MAX_JOINT_STATES {
        return Err(Error::Scale("too many joint states".into()));
    }
    let mut marg = vec![vec![0.0; k]; n];
    let total = k.pow(n as u32);
    let mut assign = vec![0usize; n];
    for idx in 0..total {
        let mut rem = idx;
        for v in (0..n).rev() {
            assign[v] = rem % k;
            rem /= k;
        }
        let value_of = |c: &CliqueNode| {
            let coords: Vec<usize> = c.members.iter().map(|m| m.map_or(0, |v| assign[v])).collect();
            c.encode(k, &coords)
        };
        let mut w = 1.0;
        for (i, c) in jt.cliques.iter().enumerate() {
            let cv = value_of(c);
            w *= match jt.parent[i] {
                None => jt.prior[cv],
                Some(p) => {
                    let sep = separator(c, &jt.cliques[p]);
                    let row = sep.iter().fold(0, |acc, &v| acc * k + assign[v]);
                    jt.tables[i].as_ref().unwrap().get(row, cv)
                }
            };
            if w == 0.0 {
                break;
            }
        }
        for (v, e) in evidence.iter().enumerate() {
            if let Some(l) = e {
                w *= l[assign[v]];
            }
        }
        if w == 0.0 {
            continue;
        }
        for v in 0..n {
            marg[v][assign[v]] += w;
        }
    }
    let mut out = Vec::with_capacity(n);
    for m in &marg {
        let mut m = m.clone();
        rescale_if_tiny(&mut m);
        out.push(crate::linalg::normalize(&m)?);
    }
    Ok(out)
}
