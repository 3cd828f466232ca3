//! Polytrees (singly connected networks, several parents allowed) answered
//! through the join tree of their families.
//!
//! The family `{v} ∪ parents(v)` of each variable is a clique. For an edge
//! `a → b` the families of `a` and `b` share exactly `a`, and linking them
//! along every edge gives a join tree with single-variable separators.
//! Parents of a node are independent before evidence, so family marginals
//! are products of parent marginals and one conditional table.

use std::collections::VecDeque;

use crate::engine::{BeliefEngine, EngineKind};
use crate::error::{Error, Result};
use crate::exact::MAX_JOINT_STATES;
use crate::jointree::{CliqueNode, DirectedJoinTree, FactoredMatrix, JoinEdge, JoinTree, VarId};
use crate::linalg::{normalize, rescale_if_tiny, Matrix, OpCounts, STOCHASTIC_TOL};

/// Default cap on the number of parents of a variable.
pub const DEFAULT_MAX_PARENTS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Polytree {
    k: usize,
    names: Vec<String>,
    parents: Vec<Vec<VarId>>,
    /// Row `t` (parent tuple, first parent most significant), column = value.
    cpts: Vec<Vec<f64>>,
}

impl Polytree {
    pub fn new(k: usize, names: Vec<String>, parents: Vec<Vec<VarId>>, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let pt = Polytree { k, names, parents, cpts };
        pt.validate()?;
        Ok(pt)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.names.len();
        if n == 0 {
            return Err(Error::Structure("polytree without variables".into()));
        }
        if self.k == 0 {
            return Err(Error::Structure("domain size must be positive".into()));
        }
        if self.parents.len() != n || self.cpts.len() != n {
            return Err(Error::Structure("parent lists and tables must cover every variable".into()));
        }
        let mut edges = 0;
        for (v, ps) in self.parents.iter().enumerate() {
            let mut sorted = ps.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != ps.len() || ps.iter().any(|&p| p >= n || p == v) {
                return Err(Error::Structure(format!("bad parent list for {}", self.names[v])));
            }
            edges += ps.len();
            let rows = self.k.pow(ps.len() as u32);
            let cpt = &self.cpts[v];
            if cpt.len() != rows * self.k {
                return Err(Error::Dimension { expected: rows * self.k, found: cpt.len() });
            }
            for row in cpt.chunks(self.k) {
                let s: f64 = row.iter().sum();
                if row.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::Invalid(format!("table of {} has a row that is not a distribution", self.names[v])));
                }
            }
        }
        if edges != n - 1 {
            return Err(Error::Structure(format!("{n} variables with {edges} links cannot be singly connected")));
        }
        // connected with n - 1 links means acyclic
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let children = self.children_lists();
        while let Some(v) = stack.pop() {
            for &w in self.parents[v].iter().chain(&children[v]) {
                if !std::mem::replace(&mut seen[w], true) {
                    stack.push(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Structure(format!("{} is disconnected; the network is not singly connected", self.names[v])));
        }
        Ok(())
    }

    fn children_lists(&self) -> Vec<Vec<VarId>> {
        let mut out = vec![Vec::new(); self.names.len()];
        for (v, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out[p].push(v);
            }
        }
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v]
    }

    pub fn cpt(&self, v: VarId) -> &[f64] {
        &self.cpts[v]
    }

    pub fn max_in_degree(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Parents before children.
    pub fn topological_order(&self) -> Vec<VarId> {
        let n = self.len();
        let children = self.children_lists();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<VarId> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut out = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        out
    }

    /// Marginal of every variable with no evidence.
    pub fn prior_marginals(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        let mut marg = vec![Vec::new(); self.len()];
        for v in self.topological_order() {
            let fam = self.family_marginal(v, &marg);
            let mut m = vec![0.0; k];
            let inner = fam.len() / k;
            for (a, slot) in m.iter_mut().enumerate() {
                *slot = fam[a * inner..(a + 1) * inner].iter().sum();
            }
            marg[v] = m;
        }
        marg
    }

    /// Joint of `[v, parents(v)...]`, `v` most significant, from the parents'
    /// marginals.
    fn family_marginal(&self, v: VarId, marg: &[Vec<f64>]) -> Vec<f64> {
        let k = self.k;
        let ps = &self.parents[v];
        let rows = k.pow(ps.len() as u32);
        let mut out = vec![0.0; k * rows];
        for t in 0..rows {
            let mut w = 1.0;
            let mut rem = t;
            for &p in ps.iter().rev() {
                w *= marg[p][rem % k];
                rem /= k;
            }
            for a in 0..k {
                out[a * rows + t] = self.cpts[v][t * k + a] * w;
            }
        }
        out
    }

    /// Family cliques linked along the network's edges, rooted at the family
    /// of the first parentless variable.
    pub fn to_join_tree(&self, max_parents: usize) -> Result<JoinTree> {
        let k = self.k;
        let n = self.len();
        if self.max_in_degree() > max_parents {
            return Err(Error::Scale(format!(
                "a variable has {} parents; the limit is {max_parents}",
                self.max_in_degree()
            )));
        }
        let cliques: Vec<Vec<VarId>> = (0..n).map(|v| std::iter::once(v).chain(self.parents[v].iter().copied()).collect()).collect();
        let marg = self.prior_marginals();
        let root = (0..n).find(|&v| self.parents[v].is_empty()).expect("a polytree has a parentless variable");
        let children = self.children_lists();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(c) = queue.pop_front() {
            for &w in self.parents[c].iter().chain(&children[c]) {
                if !std::mem::replace(&mut seen[w], true) {
                    parent[w] = Some(c);
                    queue.push_back(w);
                }
            }
        }
        let mut tables = vec![None; n];
        for c in 0..n {
            let Some(p) = parent[c] else { continue };
            // the shared variable is whichever of c, p is the other's parent
            let s = if self.parents[c].contains(&p) { p } else { c };
            let shape = CliqueNode::new(&cliques[c], 0);
            let pos = shape.position(s).unwrap();
            let fam = self.family_marginal(c, &marg);
            let width = fam.len();
            let mut t = Matrix::zeros(k, width);
            for r in 0..k {
                let ps = marg[s][r];
                if ps > 0.0 {
                    for value in 0..width {
                        if shape.coord(k, value, pos) == r {
                            t.set(r, value, fam[value] / ps);
                        }
                    }
                    let sum: f64 = t.row(r).iter().sum();
                    for value in 0..width {
                        t.set(r, value, t.get(r, value) / sum);
                    }
                } else {
                    let mut coords = vec![0; shape.width()];
                    coords[pos] = r;
                    t.set(r, shape.encode(k, &coords), 1.0);
                }
            }
            tables[c] = Some(t);
        }
        let prior = self.family_marginal(root, &marg);
        JoinTree::new(k, self.names.clone(), cliques, parent, tables, prior, Some((0..n).collect()))
    }

    /// Posterior marginals by enumerating the product of the tables.
    pub fn brute_force_marginals(&self, evidence: &[Option<Vec<f64>>]) -> Result<Vec<Vec<f64>>> {
        let k = self.k;
        let n = self.len();
        if (k as f64).powi(n as i32) > MAX_JOINT_STATES {
            return Err(Error::Scale(format!("{k}^{n} joint states exceed the enumeration limit")));
        }
        let order = self.topological_order();
        let mut marg = vec![vec![0.0; k]; n];
        let mut assign = vec![0usize; n];
        // depth-first in topological order so parents are set before children
        fn visit(pt: &Polytree, order: &[VarId], d: usize, w: f64, assign: &mut [usize], ev: &[Option<Vec<f64>>], marg: &mut [Vec<f64>]) {
            if d == order.len() {
                for (v, &a) in assign.iter().enumerate() {
                    marg[v][a] += w;
                }
                return;
            }
            let v = order[d];
            let k = pt.k;
            let row = pt.parents[v].iter().fold(0, |acc, &p| acc * k + assign[p]);
            for a in 0..k {
                let mut x = w * pt.cpts[v][row * k + a];
                if let Some(Some(l)) = ev.get(v) {
                    x *= l[a];
                }
                if x == 0.0 {
                    continue;
                }
                assign[v] = a;
                visit(pt, order, d + 1, x, assign, ev, marg);
            }
        }
        visit(self, &order, 0, 1.0, &mut assign, evidence, &mut marg);
        marg.into_iter()
            .map(|mut m| {
                rescale_if_tiny(&mut m);
                normalize(&m)
            })
            .collect()
    }
}

/// Variable-level evidence and queries on a polytree, answered by a
/// causal-tree engine running on the directed family join tree.
pub struct PolytreeEngine<M = FactoredMatrix> {
    pt: Polytree,
    djt: DirectedJoinTree<M>,
    engine: Box<dyn BeliefEngine + Send + Sync>,
}

impl<M: JoinEdge + 'static> PolytreeEngine<M> {
    pub fn new(pt: Polytree, kind: EngineKind) -> Result<Self> {
        Self::with_max_parents(pt, kind, DEFAULT_MAX_PARENTS)
    }

    pub fn with_max_parents(pt: Polytree, kind: EngineKind, max_parents: usize) -> Result<Self> {
        let djt = pt.to_join_tree(max_parents)?.directed::<M>()?;
        let engine = kind.build(djt.tree().clone())?;
        Ok(PolytreeEngine { pt, djt, engine })
    }

    pub fn polytree(&self) -> &Polytree {
        &self.pt
    }

    pub fn join_tree(&self) -> &DirectedJoinTree<M> {
        &self.djt
    }

    fn check_var(&self, v: VarId) -> Result<()> {
        if v < self.pt.len() {
            Ok(())
        } else {
            Err(Error::Lookup(format!("unknown variable {v}")))
        }
    }

    /// Replaces the likelihood on variable `v`.
    pub fn pt_update(&mut self, v: VarId, likelihood: &[f64]) -> Result<()> {
        self.check_var(v)?;
        let (leaf, lifted) = self.djt.lift(v, likelihood)?;
        self.engine.update(leaf, &lifted)
    }

    /// Posterior of `v`, read from its own family clique.
    pub fn pt_query(&self, v: VarId) -> Result<Vec<f64>> {
        self.check_var(v)?;
        self.query_via(v, v)
    }

    /// Posterior of `v` read from the family clique of `family`.
    pub fn query_via(&self, v: VarId, family: VarId) -> Result<Vec<f64>> {
        self.check_var(v)?;
        self.check_var(family)?;
        let node = self.djt.clique_node(family);
        if !self.djt.shape(node).contains(v) {
            return Err(Error::Lookup(format!("{} is not in the family of {}", self.pt.name(v), self.pt.name(family))));
        }
        let bel = self.engine.belief(node)?;
        self.djt.marginal(node, &bel, v)
    }

    pub fn counts(&self) -> OpCounts {
        self.engine.counts()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::DynamicEngine;
    use crate::gen;
    use crate::tree::{NodeId, TreeBuilder};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
    }

    #[test]
    fn single_variable() {
        let pt = Polytree::new(3, vec!["a".into()], vec![vec![]], vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let mut e = PolytreeEngine::<FactoredMatrix>::new(pt, EngineKind::Hierarchy).unwrap();
        assert!(close(&e.pt_query(0).unwrap(), &[0.2, 0.3, 0.5]));
        e.pt_update(0, &[0.0, 1.0, 1.0]).unwrap();
        assert!(close(&e.pt_query(0).unwrap(), &[0.0, 0.375, 0.625]));
    }

    #[test]
    fn two_parent_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cpt = gen::stochastic(&mut rng, 4, 2, 0.0).data().to_vec();
        let pt = Polytree::new(
            2,
            vec!["a".into(), "b".into(), "v".into()],
            vec![vec![], vec![], vec![0, 1]],
            vec![vec![0.3, 0.7], vec![0.6, 0.4], cpt],
        )
        .unwrap();
        let jt = pt.to_join_tree(DEFAULT_MAX_PARENTS).unwrap();
        assert_eq!(jt.cliques()[2].vars().collect::<Vec<_>>(), vec![2, 0, 1]);
        assert_eq!(jt.domain(), 8);
        for c in 0..3 {
            if let Some(p) = jt.parent(c) {
                assert_eq!(crate::jointree::separator(&jt.cliques()[c], &jt.cliques()[p]).len(), 1);
            }
        }
        let mut e = PolytreeEngine::<FactoredMatrix>::new(pt.clone(), EngineKind::Hierarchy).unwrap();
        e.pt_update(2, &[0.0, 1.0]).unwrap();
        let want = pt.brute_force_marginals(&[None, None, Some(vec![0.0, 1.0])]).unwrap();
        for v in 0..3 {
            assert!(close(&e.pt_query(v).unwrap(), &want[v]));
        }
        // a is also in v's family
        assert!(close(&e.query_via(0, 2).unwrap(), &want[0]));
        assert!(matches!(e.query_via(1, 0), Err(Error::Lookup(_))));
    }

    #[test]
    fn prior_marginals_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let pt = gen::random_polytree(&mut rng, 9, 3, 3, 0.2);
            let want = pt.brute_force_marginals(&[]).unwrap();
            for (a, b) in pt.prior_marginals().iter().zip(&want) {
                assert!(close(a, b));
            }
            let e = PolytreeEngine::<FactoredMatrix>::new(pt.clone(), EngineKind::Hierarchy).unwrap();
            for v in 0..pt.len() {
                assert!(close(&e.pt_query(v).unwrap(), &want[v]));
            }
        }
    }

    #[test]
    fn random_updates_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in 0..40 {
            let n = rng.gen_range(1..=10);
            let k = 2 + case % 2;
            let pt = gen::random_polytree(&mut rng, n, k, 3, 0.0);
            let mut e = PolytreeEngine::<FactoredMatrix>::new(pt.clone(), EngineKind::Hierarchy).unwrap();
            let mut ev = vec![None; n];
            for _ in 0..6 {
                let v = rng.gen_range(0..n);
                let lik = gen::random_likelihood(&mut rng, k);
                e.pt_update(v, &lik).unwrap();
                ev[v] = Some(lik);
                let want = pt.brute_force_marginals(&ev).unwrap();
                for u in 0..n {
                    assert!(close(&e.pt_query(u).unwrap(), &want[u]), "case {case}");
                }
            }
        }
    }

    #[test]
    fn causal_tree_polytree_matches_direct_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 12;
        let pt = gen::random_polytree(&mut rng, n, 2, 1, 0.0);
        let mut b = TreeBuilder::new(2);
        let xs: Vec<NodeId> = (0..n).map(|v| b.add_variable(pt.name(v))).collect();
        let es: Vec<NodeId> = (0..n).map(|v| b.add_variable(format!("e{v}"))).collect();
        for v in 0..n {
            if let [p] = pt.parents(v) {
                b.add_edge(xs[*p], xs[v], Matrix::new(2, 2, pt.cpt(v).to_vec()).unwrap()).unwrap();
            } else {
                b.set_prior(pt.cpt(v).to_vec()).unwrap();
                b.set_root(xs[v]).unwrap();
            }
            b.add_edge(xs[v], es[v], Matrix::identity(2)).unwrap();
        }
        let mut direct = DynamicEngine::new(b.binarize().unwrap()).unwrap();
        let mut e = PolytreeEngine::<FactoredMatrix>::new(pt, EngineKind::Hierarchy).unwrap();
        for _ in 0..20 {
            let v = rng.gen_range(0..n);
            let lik = gen::random_likelihood(&mut rng, 2);
            e.pt_update(v, &lik).unwrap();
            direct.update(es[v], &lik).unwrap();
            let u = rng.gen_range(0..n);
            assert!(close(&e.pt_query(u).unwrap(), &direct.belief(xs[u]).unwrap()));
        }
    }

    #[test]
    fn validation_errors() {
        let d = vec![0.5, 0.5];
        let cyc = Polytree::new(
            2,
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![], vec![0], vec![0, 1]],
            vec![d.clone(), vec![0.5; 4], vec![0.5; 8]],
        );
        assert!(matches!(cyc, Err(Error::Structure(_))));
        let bad_row = Polytree::new(2, vec!["a".into()], vec![vec![]], vec![vec![0.5, 0.6]]);
        assert!(matches!(bad_row, Err(Error::Invalid(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pt = gen::random_polytree(&mut rng, 8, 2, 3, 0.0);
        if pt.max_in_degree() > 1 {
            assert!(matches!(pt.to_join_tree(1), Err(Error::Scale(_))));
        }
        let mut e = PolytreeEngine::<FactoredMatrix>::new(pt, EngineKind::Path).unwrap();
        assert!(matches!(e.pt_update(99, &d), Err(Error::Lookup(_))));
        assert!(matches!(e.pt_update(0, &[1.0]), Err(Error::Dimension { .. })));
    }
}
