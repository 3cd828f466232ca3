//! Per-operation matrix work as chains grow: flat in log N for the
//! hierarchy, linear in N for full propagation.
//!
//! ```bash
//! cargo run --release --example scaling_bench
//! ```

use logbayes::bench::{bench, cycle_ratio, BenchConfig, Op, Shape};
use logbayes::{EngineKind, Result};

fn main() -> Result<()> {
    let sizes: Vec<usize> = (6..=14).map(|m| 1usize << m).collect();
    let mut cfg = BenchConfig::new(Shape::Chain, sizes, 2, 200, 1);
    cfg.engines = vec![EngineKind::Hierarchy, EngineKind::Full];
    let records = bench(&cfg)?;
    println!("{:>7} {:>9} {:>9} {:>9} {:>12}", "N", "upd mm", "upd mv", "query mv", "full upd mv");
    for n in records.iter().map(|r| r.n).collect::<std::collections::BTreeSet<_>>() {
        let find = |engine: &str, op| records.iter().find(|r| r.engine == engine && r.n == n && r.op == op).unwrap();
        let (u, q, f) = (find("hierarchy", Op::Update), find("hierarchy", Op::Query), find("full", Op::Update));
        println!("{n:>7} {:>9.1} {:>9.1} {:>9.1} {:>12.0}", u.mm_per_op(), u.mv_per_op(), q.mv_per_op(), f.mv_per_op());
    }
    let r = cycle_ratio(600, 2, 500, 1)?;
    println!(
        "\n{}-node chain, k = 2: {:.1} matrix ops per update+query cycle with full propagation, {:.1} with the hierarchy, ratio {:.1}",
        r.nodes,
        r.full_per_cycle,
        r.hierarchy_per_cycle,
        r.ratio()
    );
    Ok(())
}
