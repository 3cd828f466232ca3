//! Loads a small join tree, answers variable queries through clique beliefs,
//! and compares factored edge matrices with their expanded form.
//!
//! ```bash
//! cargo run --example join_tree_factored
//! ```

use logbayes::dynamic::DynamicEngine;
use logbayes::format::read_jtn;
use logbayes::jointree::{brute_force_marginals, FactoredMatrix};
use logbayes::{BeliefEngine, Matrix, Result};

fn main() -> Result<()> {
    let jt = read_jtn(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/three_cliques.jtn"))?;
    println!("{} cliques of width {}, separators of size {}", jt.cliques().len(), jt.width(), jt.max_separator());

    let factored = jt.directed::<FactoredMatrix>()?;
    let expanded = jt.directed::<Matrix>()?;
    let mut f = DynamicEngine::new(factored.tree().clone())?;
    let mut e = DynamicEngine::new(expanded.tree().clone())?;

    // observe c = 1 and soft evidence on d
    let observations = [(2, vec![0.0, 1.0]), (3, vec![0.3, 0.9])];
    let mut evidence = vec![None; jt.var_count()];
    for (v, lik) in &observations {
        let (leaf, lifted) = factored.lift(*v, lik)?;
        f.update(leaf, &lifted)?;
        e.update(leaf, &lifted)?;
        evidence[*v] = Some(lik.clone());
    }
    let exact = brute_force_marginals(&jt, &evidence)?;
    println!("\nvar  factored             expanded             enumeration");
    for v in 0..jt.var_count() {
        let x = factored.home_node(v);
        let a = factored.marginal(x, &f.belief(x)?, v)?;
        let b = expanded.marginal(x, &e.belief(x)?, v)?;
        println!("{:<4} {:.6} {:.6}    {:.6} {:.6}    {:.6} {:.6}", jt.var_name(v), a[0], a[1], b[0], b[1], exact[v][0], exact[v][1]);
    }
    println!("\nflops  factored {}  expanded {}", f.counts().flops, e.counts().flops);
    Ok(())
}
