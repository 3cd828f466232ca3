//! Exact inference on a polytree whose wet-grass node has two parents,
//! answered through the join tree of its families.
//!
//! ```bash
//! cargo run --example polytree_inference
//! ```

use logbayes::format::read_ptn;
use logbayes::polytree::PolytreeEngine;
use logbayes::{EngineKind, Result};

fn main() -> Result<()> {
    let pt = read_ptn(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sprinkler.ptn"))?;
    let mut engine: PolytreeEngine = PolytreeEngine::new(pt.clone(), EngineKind::Hierarchy)?;
    let show = |engine: &PolytreeEngine, title: &str| -> Result<()> {
        println!("{title}");
        for v in 0..pt.len() {
            let b = engine.pt_query(v)?;
            println!("  P({} = true) = {:.4}", pt.name(v), b[1]);
        }
        Ok(())
    };
    show(&engine, "no evidence")?;

    let slippery = pt.find("slippery").unwrap();
    engine.pt_update(slippery, &[0.0, 1.0])?;
    show(&engine, "the path is slippery")?;

    let sprinkler = pt.find("sprinkler").unwrap();
    engine.pt_update(sprinkler, &[0.0, 1.0])?;
    show(&engine, "... and the sprinkler was on")?;

    let mut evidence = vec![None; pt.len()];
    evidence[slippery] = Some(vec![0.0, 1.0]);
    evidence[sprinkler] = Some(vec![0.0, 1.0]);
    let exact = pt.brute_force_marginals(&evidence)?;
    let rain = pt.find("rain").unwrap();
    println!("\nenumeration gives P(rain = true) = {:.4}", exact[rain][1]);
    println!("rain read from the wet_grass family: {:.4}", engine.query_via(rain, pt.find("wet_grass").unwrap())?[1]);
    Ok(())
}
