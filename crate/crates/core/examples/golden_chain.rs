//! Builds the contraction hierarchy of a four-state chain, prints it, and
//! shows which stored matrices one evidence update recomputes.
//!
//! ```bash
//! cargo run --example golden_chain
//! ```

use logbayes::dynamic::DynamicEngine;
use logbayes::exact::propagate_all;
use logbayes::format::read_btn;
use logbayes::{OpCounter, Result};

fn main() -> Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/chain4.btn");
    let tree = read_btn(path)?;
    let mut engine = DynamicEngine::new(tree.clone())?;
    print!("{}", engine.hierarchy().dump(&tree));

    let e4 = tree.find_name("e4").expect("e4 in file");
    let trace = engine.update_evidence(e4, &[0.0, 1.0])?;
    let touched: Vec<String> = trace.iter().map(|&r| engine.hierarchy().target_name(&tree, r)).collect();
    println!("\nobserving e4 = 1 recomputes {}", touched.join(", then "));

    let mut oracle = tree.clone();
    oracle.set_evidence(e4, vec![0.0, 1.0])?;
    let exact = propagate_all(&oracle, &OpCounter::new())?;
    println!("\nnode  hierarchy            full propagation");
    for name in ["x1", "x2", "x3", "x4"] {
        let x = tree.find_name(name).unwrap();
        let b = engine.bel_query(x)?;
        println!("{name:<5} {:.6} {:.6}      {:.6} {:.6}", b[0], b[1], exact.belief(x)[0], exact.belief(x)[1]);
    }
    Ok(())
}
