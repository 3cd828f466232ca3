//! Runs one random sense/evaluate workload on a large random tree with all
//! three engines and compares answers and matrix-operation counts.
//!
//! ```bash
//! cargo run --release --example engines_compared
//! ```

use std::time::Instant;

use logbayes::{gen, BeliefEngine, EngineKind, NodeId, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let tree = gen::random_binary(&mut rng, 5000, 3);
    let leaves = tree.evidence_leaves();
    let nodes: Vec<NodeId> = tree.ids().collect();
    let steps: Vec<(NodeId, Vec<f64>, NodeId)> = (0..300)
        .map(|_| {
            let leaf = leaves[rng.gen_range(0..leaves.len())];
            (leaf, gen::random_likelihood(&mut rng, 3), nodes[rng.gen_range(0..nodes.len())])
        })
        .collect();
    println!("{} nodes, k = 3, {} update+query cycles\n", tree.len(), steps.len());

    let mut answers: Vec<Vec<Vec<f64>>> = Vec::new();
    println!("{:<10} {:>12} {:>12} {:>10}", "engine", "mat-vec", "mat-mat", "ms");
    for kind in EngineKind::ALL {
        let mut engine: Box<dyn BeliefEngine + Send + Sync> = kind.build(tree.clone())?;
        let before = engine.counts();
        let start = Instant::now();
        let mut got = Vec::new();
        for (leaf, lik, q) in &steps {
            engine.update(*leaf, lik)?;
            got.push(engine.belief(*q)?);
        }
        let c = engine.counts() - before;
        println!("{:<10} {:>12} {:>12} {:>10.1}", kind.name(), c.mat_vec, c.mat_mat, start.elapsed().as_secs_f64() * 1e3);
        answers.push(got);
    }
    let worst = answers[1..]
        .iter()
        .flat_map(|other| other.iter().zip(&answers[0]))
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!("\nlargest disagreement with the hierarchy: {worst:.2e}");
    Ok(())
}
