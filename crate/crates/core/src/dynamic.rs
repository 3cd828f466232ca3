//! Logarithmic-time queries and updates over a [`ContractionHierarchy`].
//!
//! Only the level matrices are kept current. λ and π values are rebuilt on
//! demand: a λ query descends through the levels at which its subtree was
//! raked, and [`DynamicEngine::calc_pi_lambda`] climbs one level per call
//! and returns π of a node together with λ of both its children, so a
//! belief query costs a constant number of matrix-vector products per level.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::contract::{ContractionHierarchy, RecipeId, Side};
use crate::engine::BeliefEngine;
use crate::error::{Error, Result};
use crate::linalg::{normalize, rescale_if_tiny, EdgeMatrix, Matrix, OpCounter, OpCounts};
use crate::tree::{CausalTree, NodeId};

/// `(π(x), λ(left child), λ(right child))` at some level.
pub type Triple = (Vec<f64>, Vec<f64>, Vec<f64>);

#[derive(Debug)]
pub struct DynamicEngine<M = Matrix> {
    tree: CausalTree<M>,
    hier: ContractionHierarchy<M>,
    ops: OpCounter,
    recomputed: AtomicU64,
}

fn mul(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
    rescale_if_tiny(&mut out);
    out
}

impl<M: EdgeMatrix> DynamicEngine<M> {
    pub fn new(tree: CausalTree<M>) -> Result<Self> {
        let hier = ContractionHierarchy::build(&tree)?;
        Ok(DynamicEngine { tree, hier, ops: OpCounter::new(), recomputed: AtomicU64::new(0) })
    }

    pub fn tree(&self) -> &CausalTree<M> {
        &self.tree
    }

    pub fn hierarchy(&self) -> &ContractionHierarchy<M> {
        &self.hier
    }

    /// Recipes re-evaluated by updates so far.
    pub fn recomputations(&self) -> u64 {
        self.recomputed.load(Ordering::Relaxed)
    }

    fn check_node(&self, x: NodeId) -> Result<()> {
        if self.tree.contains(x) {
            Ok(())
        } else {
            Err(Error::Lookup(format!("unknown node {x}")))
        }
    }

    /// Stores the new likelihood of `leaf` and re-evaluates the chain of
    /// recipes that depends on it. Returns the recipes touched, lowest
    /// level first.
    pub fn update_evidence(&mut self, leaf: NodeId, likelihood: &[f64]) -> Result<Vec<RecipeId>> {
        self.tree.set_evidence(leaf, likelihood.to_vec())?;
        self.hier.set_slot(leaf, likelihood.to_vec());
        let mut trace = Vec::new();
        let mut next = self.hier.leaf_recipe(leaf);
        while let Some(r) = next {
            let target = self.hier.recompute(r, &self.ops);
            trace.push(r);
            next = self.hier.successor(target);
        }
        self.recomputed.fetch_add(trace.len() as u64, Ordering::Relaxed);
        Ok(trace)
    }

    /// λ of `x` given the current evidence.
    pub fn lambda_query(&self, x: NodeId) -> Result<Vec<f64>> {
        self.check_node(x)?;
        Ok(self.lambda(x))
    }

    fn lambda(&self, x: NodeId) -> Vec<f64> {
        if self.hier.is_leaf(x) {
            return self.hier.slot(x).to_vec();
        }
        let i = self.hier.ind(x);
        self.lambda_at(x, i)
    }

    /// λ of an internal node `x` from its children at level `i`.
    fn lambda_at(&self, x: NodeId, i: usize) -> Vec<f64> {
        let (l, r) = self.hier.children_at(x, i).expect("internal");
        let a = self.hier.matrix_at(x, Side::A, i).unwrap();
        let b = self.hier.matrix_at(x, Side::B, i).unwrap();
        let ll = self.lambda(l);
        let lr = self.lambda(r);
        mul(&a.apply(&ll, &self.ops), &b.apply(&lr, &self.ops))
    }

    /// π of `x` and λ of its two children in `T_i`. `x` must be internal and
    /// present at level `i`.
    pub fn calc_pi_lambda(&self, x: NodeId, i: usize) -> Result<Triple> {
        self.check_node(x)?;
        if self.hier.is_leaf(x) {
            return Err(Error::Usage(format!("node {} is a leaf", self.tree.label(x))));
        }
        if i > self.hier.ind(x) {
            return Err(Error::Usage(format!("node {} is absent at level {i}", self.tree.label(x))));
        }
        Ok(self.calc(x, i))
    }

    fn calc(&self, x: NodeId, i: usize) -> Triple {
        let top = self.hier.top_level();
        let (l, r) = self.hier.children_at(x, i).expect("internal");
        if i == top {
            return (self.hier.prior().to_vec(), self.hier.slot(l).to_vec(), self.hier.slot(r).to_vec());
        }
        if self.hier.ind(x) == i {
            // x is raked away at this level: one child is the raked leaf,
            // the other survives under x's parent u
            let u = self.hier.parent_at(x, i).expect("non-root");
            let (pu, ul, ur) = self.calc(u, i + 1);
            let (ux_l, _) = self.hier.children_at(u, i).unwrap();
            let x_side = if ux_l == x { Side::A } else { Side::B };
            let (lam_z, lam_v) = match x_side {
                Side::A => (ul, ur),
                Side::B => (ur, ul),
            };
            let other = self.hier.matrix_at(u, x_side.other(), i + 1).unwrap();
            let toward_x = self.hier.matrix_at(u, x_side, i).unwrap();
            let msg = other.apply(&lam_v, &self.ops);
            let mut pi = toward_x.apply_transpose(&mul(&pu, &msg), &self.ops);
            rescale_if_tiny(&mut pi);
            return if self.hier.ind(l) == i {
                (pi, self.hier.slot(l).to_vec(), lam_z)
            } else {
                (pi, lam_z, self.hier.slot(r).to_vec())
            };
        }
        let (pi, nl, nr) = self.calc(x, i + 1);
        let (l1, r1) = self.hier.children_at(x, i + 1).unwrap();
        let lam_l = if l1 == l { nl } else { self.rebuild(l, i, &nl) };
        let lam_r = if r1 == r { nr } else { self.rebuild(r, i, &nr) };
        (pi, lam_l, lam_r)
    }

    fn raked_here(&self, leaf: NodeId, i: usize) -> bool {
        self.hier.is_leaf(leaf) && self.hier.ind(leaf) == i
    }

    /// λ of a child `c` raked at level `i`, given λ of its surviving child.
    fn rebuild(&self, c: NodeId, i: usize, survivor: &[f64]) -> Vec<f64> {
        let (cl, _) = self.hier.children_at(c, i).unwrap();
        let a = self.hier.matrix_at(c, Side::A, i).unwrap();
        let b = self.hier.matrix_at(c, Side::B, i).unwrap();
        let (ll, lr) = if self.raked_here(cl, i) {
            (self.hier.slot(cl).to_vec(), survivor.to_vec())
        } else {
            let (_, cr) = self.hier.children_at(c, i).unwrap();
            (survivor.to_vec(), self.hier.slot(cr).to_vec())
        };
        mul(&a.apply(&ll, &self.ops), &b.apply(&lr, &self.ops))
    }

    /// π of any node.
    pub fn pi_query(&self, x: NodeId) -> Result<Vec<f64>> {
        self.check_node(x)?;
        Ok(self.pi_and_lambda(x).0)
    }

    fn pi_and_lambda(&self, x: NodeId) -> (Vec<f64>, Vec<f64>) {
        if self.hier.len() == 1 {
            return (self.hier.prior().to_vec(), self.hier.slot(x).to_vec());
        }
        let i = self.hier.ind(x);
        if self.hier.is_leaf(x) {
            let p = self.hier.parent_at(x, i).expect("leaf below root");
            let (pp, ll, lr) = self.calc(p, i);
            let (pl, _) = self.hier.children_at(p, i).unwrap();
            let side = if pl == x { Side::A } else { Side::B };
            let sib = if side == Side::A { lr } else { ll };
            let msg = self.hier.matrix_at(p, side.other(), i).unwrap().apply(&sib, &self.ops);
            let mut pi = self.hier.matrix_at(p, side, i).unwrap().apply_transpose(&mul(&pp, &msg), &self.ops);
            rescale_if_tiny(&mut pi);
            return (pi, self.hier.slot(x).to_vec());
        }
        let (pi, ll, lr) = self.calc(x, i);
        let a = self.hier.matrix_at(x, Side::A, i).unwrap();
        let b = self.hier.matrix_at(x, Side::B, i).unwrap();
        let lam = mul(&a.apply(&ll, &self.ops), &b.apply(&lr, &self.ops));
        (pi, lam)
    }

    /// Posterior of `x`. Copies made by binarization answer for their original.
    pub fn bel_query(&self, x: NodeId) -> Result<Vec<f64>> {
        self.check_node(x)?;
        let x = self.tree.resolve(x);
        let (pi, lam) = self.pi_and_lambda(x);
        normalize(&mul(&lam, &pi)).map_err(|e| e.at_node(x))
    }
}

impl<M: EdgeMatrix> BeliefEngine for DynamicEngine<M> {
    fn name(&self) -> &'static str {
        "hierarchy"
    }

    fn update(&mut self, leaf: NodeId, likelihood: &[f64]) -> Result<()> {
        self.update_evidence(leaf, likelihood).map(|_| ())
    }

    fn belief(&self, node: NodeId) -> Result<Vec<f64>> {
        self.bel_query(node)
    }

    fn counts(&self) -> OpCounts {
        self.ops.snapshot()
    }

    fn build_counts(&self) -> OpCounts {
        self.hier.build_counts()
    }
}
