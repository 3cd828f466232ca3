//! Random models for tests, benchmarks and examples. Every generator draws
//! from a caller-supplied RNG, so a fixed seed reproduces the same model.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::format::fmt_f64;
use crate::jointree::{CliqueNode, JoinTree, VarId};
use crate::linalg::Matrix;
use crate::polytree::Polytree;
use crate::tree::{CausalTree, NodeId, TreeBuilder};

/// Row-stochastic `rows × cols` matrix. With `zero_prob > 0` some entries
/// are zeroed, keeping at least one positive entry per row.
pub fn stochastic<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, zero_prob: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let keep = rng.gen_range(0..cols);
        let mut sum = 0.0;
        for c in 0..cols {
            let v = if c != keep && rng.gen_bool(zero_prob) { 0.0 } else { rng.gen_range(0.05..1.0) };
            m.set(r, c, v);
            sum += v;
        }
        for c in 0..cols {
            m.set(r, c, m.get(r, c) / sum);
        }
    }
    m
}

pub fn distribution<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    stochastic(rng, 1, k, 0.0).row(0).to_vec()
}

/// Strictly positive likelihood vector.
pub fn random_likelihood<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(0.01..1.0)).collect()
}

/// Likelihood with each entry zero with probability `zero_prob`, possibly
/// all zero.
pub fn sparse_likelihood<R: Rng + ?Sized>(rng: &mut R, k: usize, zero_prob: f64) -> Vec<f64> {
    (0..k).map(|_| if rng.gen_bool(zero_prob) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect()
}

/// Chain of `len` variables `x1..x_len` with one evidence leaf hanging off
/// each and a second one under the last: `x_j` has children `(e_j, x_{j+1})`
/// and `x_len` has `(e_len, e_{len+1})`. `len + 1` leaves, `2·len + 1` nodes.
pub fn chain<R: Rng + ?Sized>(len: usize, k: usize, rng: &mut R) -> CausalTree {
    assert!(len >= 1);
    let mut b = TreeBuilder::new(k);
    let xs: Vec<NodeId> = (1..=len).map(|j| b.add_variable(format!("x{j}"))).collect();
    let es: Vec<NodeId> = (1..=len + 1).map(|j| b.add_variable(format!("e{j}"))).collect();
    for j in 0..len {
        b.add_edge(xs[j], es[j], stochastic(rng, k, k, 0.0)).unwrap();
        if j + 1 < len {
            b.add_edge(xs[j], xs[j + 1], stochastic(rng, k, k, 0.0)).unwrap();
        }
    }
    b.add_edge(xs[len - 1], es[len], stochastic(rng, k, k, 0.0)).unwrap();
    b.set_prior(distribution(rng, k)).unwrap();
    b.binarize().unwrap()
}

/// Complete-as-possible binary tree with `leaves` leaves.
pub fn balanced<R: Rng + ?Sized>(leaves: usize, k: usize, rng: &mut R) -> CausalTree {
    assert!(leaves >= 1);
    let mut b = TreeBuilder::new(k);
    let root = b.add_variable("n0");
    let mut stack = vec![(root, leaves)];
    while let Some((x, n)) = stack.pop() {
        if n == 1 {
            continue;
        }
        let half = n / 2;
        for part in [n - half, half] {
            let c = b.add_variable(format!("n{}", b.len()));
            b.add_edge(x, c, stochastic(rng, k, k, 0.0)).unwrap();
            stack.push((c, part));
        }
    }
    b.set_prior(distribution(rng, k)).unwrap();
    b.binarize().unwrap()
}

/// Binary tree grown by splitting a uniformly chosen leaf `leaves - 1`
/// times.
pub fn random_binary<R: Rng + ?Sized>(rng: &mut R, leaves: usize, k: usize) -> CausalTree {
    random_binary_with(rng, leaves, k, 0.0)
}

/// As [`random_binary`], with matrix entries zeroed at rate `zero_prob`.
pub fn random_binary_with<R: Rng + ?Sized>(rng: &mut R, leaves: usize, k: usize, zero_prob: f64) -> CausalTree {
    assert!(leaves >= 1);
    let mut b = TreeBuilder::new(k);
    let root = b.add_variable("n0");
    let mut open = vec![root];
    while open.len() < leaves {
        let i = rng.gen_range(0..open.len());
        let x = open.swap_remove(i);
        for _ in 0..2 {
            let c = b.add_variable(format!("n{}", b.len()));
            b.add_edge(x, c, stochastic(rng, k, k, zero_prob)).unwrap();
            open.push(c);
        }
    }
    b.set_prior(distribution(rng, k)).unwrap();
    b.binarize().unwrap()
}

/// Random recursive tree of `nodes` variables with arbitrary fan-out, before
/// binarization. Each node attaches to a uniformly chosen earlier node.
pub fn random_builder<R: Rng + ?Sized>(rng: &mut R, nodes: usize, k: usize, zero_prob: f64) -> TreeBuilder {
    let mut b = TreeBuilder::new(k);
    let root = b.add_variable("v0");
    let mut ids = vec![root];
    for i in 1..nodes {
        let p = ids[rng.gen_range(0..ids.len())];
        let c = b.add_variable(format!("v{i}"));
        b.add_edge(p, c, stochastic(rng, k, k, zero_prob)).unwrap();
        ids.push(c);
    }
    b.set_prior(distribution(rng, k)).unwrap();
    b
}

/// Binarized random tree of at most `max_nodes` nodes, with random positive
/// evidence on about half of its evidence leaves.
pub fn small_random_tree<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize, k: usize) -> CausalTree {
    loop {
        let raw = rng.gen_range(1..=max_nodes.div_ceil(2).max(1) + 1);
        let mut t = random_builder(rng, raw, k, 0.2).binarize().unwrap();
        if t.len() > max_nodes {
            continue;
        }
        for leaf in t.evidence_leaves() {
            if rng.gen_bool(0.5) {
                t.set_evidence(leaf, random_likelihood(rng, k)).unwrap();
            }
        }
        return t;
    }
}

/// Evidence leaves in random order.
pub fn shuffled_leaves<R: Rng + ?Sized>(rng: &mut R, tree: &CausalTree) -> Vec<NodeId> {
    let mut v = tree.evidence_leaves();
    v.shuffle(rng);
    v
}

/// Random polytree on `n` variables with at most `max_parents` parents per
/// variable. Each new variable links to a uniformly chosen earlier one in a
/// random direction.
pub fn random_polytree<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, max_parents: usize, zero_prob: f64) -> Polytree {
    assert!(n >= 1 && max_parents >= 1);
    let mut parents: Vec<Vec<VarId>> = vec![Vec::new(); n];
    for c in 1..n {
        let e = rng.gen_range(0..c);
        if parents[e].len() < max_parents && rng.gen_bool(0.5) {
            parents[e].push(c);
        } else {
            parents[c].push(e);
        }
    }
    let cpts = parents
        .iter()
        .map(|ps| stochastic(rng, k.pow(ps.len() as u32), k, zero_prob).data().to_vec())
        .collect();
    let names = (0..n).map(|v| format!("v{v}")).collect();
    Polytree::new(k, names, parents, cpts).expect("generated polytree is valid")
}

/// Random join tree with at most `max_width` variables per clique and at
/// most `max_sep` shared with the parent clique. Tables put their mass on
/// values that agree with the separator row.
pub fn random_join_tree<R: Rng + ?Sized>(rng: &mut R, cliques: usize, k: usize, max_width: usize, max_sep: usize) -> JoinTree {
    assert!(max_width >= 2 && max_sep >= 1);
    let mut vars = 0;
    let mut members: Vec<Vec<VarId>> = Vec::new();
    let mut parent = Vec::new();
    let root_width = rng.gen_range(1..=max_width);
    members.push((0..root_width).collect());
    vars += root_width;
    parent.push(None);
    for _ in 1..cliques {
        let p = rng.gen_range(0..members.len());
        let mut pool = members[p].clone();
        pool.shuffle(rng);
        let sep_len = rng.gen_range(1..=max_sep.min(pool.len()).min(max_width - 1));
        let mut c: Vec<VarId> = pool[..sep_len].to_vec();
        let fresh = rng.gen_range(1..=max_width - sep_len);
        c.extend(vars..vars + fresh);
        vars += fresh;
        c.shuffle(rng);
        members.push(c);
        parent.push(Some(p));
    }
    let mut tables = vec![None];
    for i in 1..cliques {
        let p = parent[i].unwrap();
        let shape = CliqueNode::new(&members[i], 0);
        let sep: Vec<VarId> = members[i].iter().copied().filter(|v| members[p].contains(v)).collect();
        let width = k.pow(members[i].len() as u32);
        let rows = k.pow(sep.len() as u32);
        let mut t = Matrix::zeros(rows, width);
        for r in 0..rows {
            let mut sum = 0.0;
            for value in 0..width {
                let proj = sep.iter().fold(0, |acc, &v| acc * k + shape.coord(k, value, shape.position(v).unwrap()));
                if proj == r {
                    let w = rng.gen_range(0.05..1.0);
                    t.set(r, value, w);
                    sum += w;
                }
            }
            for value in 0..width {
                t.set(r, value, t.get(r, value) / sum);
            }
        }
        tables.push(Some(t));
    }
    let prior = distribution(rng, k.pow(root_width as u32));
    let names = (0..vars).map(|v| format!("v{v}")).collect();
    JoinTree::new(k, names, members, parent, tables, prior, None).expect("generated join tree is valid")
}

/// Session script of `len` commands on `tree`: updates on random evidence
/// leaves, some with zero entries, queries on random nodes, an occasional
/// `stats`, then `quit`.
pub fn random_script<R: Rng + ?Sized>(rng: &mut R, tree: &CausalTree, len: usize) -> String {
    let leaves = tree.evidence_leaves();
    let ids: Vec<NodeId> = tree.ids().collect();
    let mut s = String::new();
    for _ in 0..len {
        let roll = rng.gen_range(0..10);
        if roll < 4 && !leaves.is_empty() {
            let leaf = leaves[rng.gen_range(0..leaves.len())];
            let lik = sparse_likelihood(rng, tree.dim(), 0.3);
            s.push_str(&format!("update {}", tree.label(leaf)));
            for x in lik {
                s.push(' ');
                s.push_str(&fmt_f64(x));
            }
            s.push('\n');
        } else if roll < 9 {
            s.push_str(&format!("query {}\n", tree.label(ids[rng.gen_range(0..ids.len())])));
        } else {
            s.push_str("stats\n");
        }
    }
    s.push_str("quit\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::STOCHASTIC_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_validity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = chain(7, 3, &mut rng);
        assert_eq!(c.len(), 15);
        assert_eq!(c.leaves().len(), 8);
        let b = balanced(16, 2, &mut rng);
        assert_eq!(b.leaves().len(), 16);
        assert_eq!(b.depth(b.leaves()[0]), 4);
        let r = random_binary(&mut rng, 40, 4);
        assert_eq!(r.leaves().len(), 40);
        for t in [&c, &b, &r] {
            assert!(t.validate().is_empty());
        }
        for _ in 0..50 {
            assert!(small_random_tree(&mut rng, 14, 3).len() <= 14);
        }
        let m = stochastic(&mut rng, 5, 5, 0.6);
        assert!(m.is_row_stochastic(STOCHASTIC_TOL));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_binary(&mut ChaCha8Rng::seed_from_u64(9), 20, 3);
        let b = random_binary(&mut ChaCha8Rng::seed_from_u64(9), 20, 3);
        for x in a.ids().skip(1) {
            assert!(a.edge(x).unwrap().bit_eq(b.edge(x).unwrap()));
        }
    }
}
