//! Drives the line protocol in memory: the same script a user would pipe
//! into `logbayes session`, answered by each engine in turn.
//!
//! ```bash
//! cargo run --example incremental_session
//! ```

use logbayes::format::read_btn;
use logbayes::session::{run_script, TreeTarget};
use logbayes::{EngineKind, Result};

const SCRIPT: &str = "\
query 0
update 4 1 0
update 7 0 1
query 0
query 3
stats
update 3 1 1
update 8 0 0
query 1
update 8 1 1
query 1
quit
";

fn main() -> Result<()> {
    let tree = read_btn(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/chain4.btn"))?;
    println!("script:\n{SCRIPT}");
    for kind in EngineKind::ALL {
        let mut target = TreeTarget::new(tree.clone(), kind)?;
        println!("--- {kind}");
        for line in run_script(&mut target, SCRIPT) {
            println!("{line}");
        }
    }
    Ok(())
}
