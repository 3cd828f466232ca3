use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use logbayes::contract::ContractionHierarchy;
use logbayes::dynamic::DynamicEngine;
use logbayes::exact::{joint_marginals, propagate_all};
use logbayes::format::{parse_btn, parse_jtn, parse_ptn, write_btn, write_jtn, write_ptn};
use logbayes::gen;
use logbayes::jointree::FactoredMatrix;
use logbayes::polytree::PolytreeEngine;
use logbayes::{BeliefEngine, EngineKind, OpCounter};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn btn_round_trip(seed in any::<u64>(), leaves in 1usize..20, k in 2usize..4) {
        let mut r = rng(seed);
        let mut tree = gen::random_binary(&mut r, leaves, k);
        for leaf in tree.evidence_leaves() {
            if r.gen_bool(0.3) {
                tree.set_evidence(leaf, gen::random_likelihood(&mut r, k)).unwrap();
            }
        }
        let text = write_btn(&tree);
        let back = parse_btn(&text).unwrap();
        prop_assert_eq!(back.len(), tree.len());
        prop_assert_eq!(write_btn(&back), text);
        let (a, b) = (propagate_all(&tree, &OpCounter::new()), propagate_all(&back, &OpCounter::new()));
        if let (Ok(a), Ok(b)) = (a, b) {
            for x in tree.ids() {
                prop_assert_eq!(a.belief(x), b.belief(back.find(tree.label(x)).unwrap()));
            }
        }
    }

    #[test]
    fn ptn_round_trip(seed in any::<u64>(), n in 1usize..15, k in 2usize..4, p in 1usize..4) {
        let pt = gen::random_polytree(&mut rng(seed), n, k, p, 0.1);
        let text = write_ptn(&pt);
        let back = parse_ptn(&text).unwrap();
        prop_assert_eq!(&back, &pt);
        prop_assert_eq!(write_ptn(&back), text);
    }

    #[test]
    fn jtn_round_trip(seed in any::<u64>(), cliques in 1usize..8, width in 2usize..5) {
        let jt = gen::random_join_tree(&mut rng(seed), cliques, 2, width, width.min(2));
        let text = write_jtn(&jt);
        let back = parse_jtn(&text).unwrap();
        prop_assert_eq!(write_jtn(&back), text);
        prop_assert_eq!(back.cliques(), jt.cliques());
        prop_assert_eq!(back.prior(), jt.prior());
    }

    #[test]
    fn binarize_preserves_marginals(seed in any::<u64>(), nodes in 1usize..9, k in 2usize..4) {
        let mut r = rng(seed);
        let builder = gen::random_builder(&mut r, nodes, k, 0.0);
        let raw = builder.clone().into_tree_unchecked().unwrap();
        let bin = builder.binarize().unwrap();
        prop_assert!(bin.validate().is_empty());
        prop_assert!(bin.len() <= 2 * raw.len() + 1);
        let internal = bin.ids().filter(|&x| !bin.is_leaf(x)).count();
        prop_assert_eq!(internal + 1, bin.leaves().len());
        let (a, b) = (joint_marginals(&raw).unwrap(), joint_marginals(&bin).unwrap());
        for x in raw.ids() {
            prop_assert!(close(&a[x.index()], &b[x.index()], 1e-12));
        }
    }

    #[test]
    fn recipes_form_a_forest(seed in any::<u64>(), leaves in 2usize..200) {
        let tree = gen::random_binary(&mut rng(seed), leaves, 2);
        let h = ContractionHierarchy::build(&tree).unwrap();
        prop_assert!(h.audit().is_empty(), "{:?}", h.audit());
        prop_assert!(h.nodes_at(h.top_level()).len() <= 3);
        prop_assert!(h.fresh_matrix_count() <= 2 * h.base_matrix_count());
        let mut outputs = std::collections::HashSet::new();
        for rc in h.recipes() {
            prop_assert!(outputs.insert(rc.target.0));
        }
    }

    #[test]
    fn update_order_does_not_matter(seed in any::<u64>(), leaves in 2usize..60) {
        let mut r = rng(seed);
        let tree = gen::random_binary(&mut r, leaves, 3);
        let ev: Vec<_> = gen::shuffled_leaves(&mut r, &tree)
            .into_iter()
            .take(6)
            .map(|l| (l, gen::random_likelihood(&mut r, 3)))
            .collect();
        let mut a = DynamicEngine::new(tree.clone()).unwrap();
        let mut b = DynamicEngine::new(tree.clone()).unwrap();
        for (l, v) in &ev {
            a.update(*l, v).unwrap();
        }
        for (l, v) in ev.iter().rev() {
            b.update(*l, v).unwrap();
        }
        for x in tree.ids() {
            prop_assert!(close(&a.belief(x).unwrap(), &b.belief(x).unwrap(), 1e-12));
        }
    }

    #[test]
    fn beliefs_are_distributions(seed in any::<u64>(), leaves in 1usize..40, k in 2usize..5) {
        let mut r = rng(seed);
        let tree = gen::random_binary(&mut r, leaves, k);
        let mut e = DynamicEngine::new(tree.clone()).unwrap();
        for l in gen::shuffled_leaves(&mut r, &tree).into_iter().take(5) {
            e.update(l, &gen::random_likelihood(&mut r, k)).unwrap();
        }
        for x in tree.ids() {
            let b = e.belief(x).unwrap();
            prop_assert!(b.iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

/// Doubling k at a fixed parent bound scales update work by roughly
/// `2^(p+3)`, the cost of one product of `k^(p+1)`-sized factored matrices.
#[test]
fn polytree_update_cost_follows_clique_size() {
    for p in 1..=2usize {
        let mut per_update = Vec::new();
        for k in [2usize, 4] {
            let mut r = rng(11);
            let pt = gen::random_polytree(&mut r, 40, k, p, 0.0);
            let mut e: PolytreeEngine<FactoredMatrix> = PolytreeEngine::with_max_parents(pt, EngineKind::Hierarchy, p).unwrap();
            let before = e.counts();
            let updates = 60;
            for _ in 0..updates {
                let v = r.gen_range(0..40);
                e.pt_update(v, &gen::random_likelihood(&mut r, k)).unwrap();
            }
            per_update.push((e.counts() - before).flops as f64 / updates as f64);
        }
        let growth = per_update[1] / per_update[0];
        let expected = 2f64.powi(p as i32 + 3);
        assert!(growth > expected / 2.0 && growth < expected * 2.0, "p={p}: growth {growth}, expected about {expected}");
    }
}
