use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use logbayes::gen;
use logbayes::polytree::PolytreeEngine;
use logbayes::session::{parse_belief, run_script, TreeTarget};
use logbayes::EngineKind;

#[test]
fn engines_agree_line_for_line_on_random_sessions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut beliefs = 0;
    let mut inconsistent = 0;
    for case in 0..100 {
        let leaves = rng.gen_range(1..=100);
        let k = rng.gen_range(2..=4);
        let tree = gen::random_binary_with(&mut rng, leaves, k, 0.25);
        assert!(tree.len() <= 200);
        let script = gen::random_script(&mut rng, &tree, 60);
        let outs: Vec<Vec<String>> = EngineKind::ALL
            .iter()
            .map(|&kind| run_script(&mut TreeTarget::new(tree.clone(), kind).unwrap(), &script))
            .collect();
        for (name, other) in ["path", "full"].iter().zip(&outs[1..]) {
            assert_eq!(outs[0].len(), other.len());
            for (line, (a, b)) in outs[0].iter().zip(other).enumerate() {
                match (parse_belief(a), parse_belief(b)) {
                    (Some(x), Some(y)) => {
                        let d = x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                        assert!(d <= 1e-9, "case {case} line {line}: hierarchy vs {name} differ by {d}");
                        beliefs += 1;
                    }
                    _ if a.starts_with("stats") => assert!(b.starts_with("stats")),
                    _ => {
                        assert_eq!(a, b, "case {case} line {line}");
                        inconsistent += usize::from(a == "err inconsistent");
                    }
                }
            }
        }
    }
    assert!(beliefs > 1000);
    assert!(inconsistent > 0, "zero-heavy matrices should produce some inconsistent sessions");
}

#[test]
fn polytree_engines_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..30 {
        let n = rng.gen_range(2..30);
        let k = rng.gen_range(2..=3);
        let pt = gen::random_polytree(&mut rng, n, k, 3, 0.0);
        let mut engines: Vec<PolytreeEngine> =
            EngineKind::ALL.iter().map(|&kind| PolytreeEngine::new(pt.clone(), kind).unwrap()).collect();
        for _ in 0..20 {
            let v = rng.gen_range(0..n);
            let lik = gen::random_likelihood(&mut rng, k);
            for e in &mut engines {
                e.pt_update(v, &lik).unwrap();
            }
            let q = rng.gen_range(0..n);
            let first = engines[0].pt_query(q).unwrap();
            for e in &engines[1..] {
                let b = e.pt_query(q).unwrap();
                assert!(first.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-9));
            }
        }
    }
}
