//! Scripted sense/evaluate loop over a loaded model.
//!
//! One command per line, one response line per command:
//!
//! ```text
//! update <leaf-id> <k floats>   ->  ok
//! query <node-id>               ->  bel <k floats, 17 significant digits>
//! stats                         ->  stats mv=<n> mm=<n> flops=<n>
//! quit                          ->  (no response; the session ends)
//! ```
//!
//! Failures answer `err <message>`, or `err inconsistent` when the evidence
//! has zero probability, and the session carries on. Blank lines and `#`
//! comments get no response.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use crate::engine::{BeliefEngine, EngineKind};
use crate::error::{Error, Result};
use crate::jointree::FactoredMatrix;
use crate::linalg::OpCounts;
use crate::polytree::{Polytree, PolytreeEngine};
use crate::tree::CausalTree;

/// A model addressed by file ids.
pub trait SessionTarget {
    fn k(&self) -> usize;
    fn update(&mut self, id: u64, likelihood: &[f64]) -> Result<()>;
    fn query(&self, id: u64) -> Result<Vec<f64>>;
    fn counts(&self) -> OpCounts;
}

/// Causal tree behind any engine; ids are BTN node ids.
pub struct TreeTarget {
    tree: CausalTree,
    engine: Box<dyn BeliefEngine + Send + Sync>,
}

impl TreeTarget {
    pub fn new(tree: CausalTree, kind: EngineKind) -> Result<Self> {
        let engine = kind.build(tree.clone())?;
        Ok(TreeTarget { tree, engine })
    }

    fn node(&self, id: u64) -> Result<crate::tree::NodeId> {
        self.tree.find(id).ok_or_else(|| Error::Lookup(format!("unknown node {id}")))
    }
}

impl SessionTarget for TreeTarget {
    fn k(&self) -> usize {
        self.tree.dim()
    }

    fn update(&mut self, id: u64, likelihood: &[f64]) -> Result<()> {
        let x = self.node(id)?;
        self.engine.update(x, likelihood)
    }

    fn query(&self, id: u64) -> Result<Vec<f64>> {
        self.engine.belief(self.node(id)?)
    }

    fn counts(&self) -> OpCounts {
        self.engine.counts()
    }
}

/// Polytree through its family join tree; ids are PTN node ids and
/// evidence may be posted on any variable.
pub struct PolytreeTarget {
    engine: PolytreeEngine<FactoredMatrix>,
    index: HashMap<u64, usize>,
}

impl PolytreeTarget {
    pub fn new(pt: Polytree, ids: &[u64], kind: EngineKind) -> Result<Self> {
        if ids.len() != pt.len() {
            return Err(Error::Dimension { expected: pt.len(), found: ids.len() });
        }
        let index = ids.iter().enumerate().map(|(v, &id)| (id, v)).collect();
        Ok(PolytreeTarget { engine: PolytreeEngine::new(pt, kind)?, index })
    }

    fn var(&self, id: u64) -> Result<usize> {
        self.index.get(&id).copied().ok_or_else(|| Error::Lookup(format!("unknown node {id}")))
    }
}

impl SessionTarget for PolytreeTarget {
    fn k(&self) -> usize {
        self.engine.polytree().k()
    }

    fn update(&mut self, id: u64, likelihood: &[f64]) -> Result<()> {
        let v = self.var(id)?;
        self.engine.pt_update(v, likelihood)
    }

    fn query(&self, id: u64) -> Result<Vec<f64>> {
        self.engine.pt_query(self.var(id)?)
    }

    fn counts(&self) -> OpCounts {
        self.engine.counts()
    }
}

pub fn format_belief(bel: &[f64]) -> String {
    let mut s = String::from("bel");
    for x in bel {
        s.push_str(&format!(" {x:.16e}"));
    }
    s
}

fn format_error(e: &Error) -> String {
    if e.is_inconsistent() {
        "err inconsistent".into()
    } else {
        format!("err {e}")
    }
}

fn parse_id(field: Option<&str>) -> Result<u64> {
    let f = field.ok_or_else(|| Error::Usage("missing node id".into()))?;
    f.parse().map_err(|_| Error::Usage(format!("`{f}` is not a node id")))
}

/// Response to one line, `None` for blank lines and comments. `quit` is
/// handled by the caller.
pub fn respond<T: SessionTarget + ?Sized>(target: &mut T, line: &str) -> Option<String> {
    let line = line.split('#').next().unwrap();
    let mut fields = line.split_whitespace();
    let cmd = fields.next()?;
    let out = match cmd {
        "update" => (|| {
            let id = parse_id(fields.next())?;
            let lik = fields
                .map(|f| f.parse::<f64>().map_err(|_| Error::Usage(format!("`{f}` is not a number"))))
                .collect::<Result<Vec<_>>>()?;
            if lik.len() != target.k() {
                return Err(Error::Dimension { expected: target.k(), found: lik.len() });
            }
            target.update(id, &lik).map(|_| "ok".to_string())
        })(),
        "query" => (|| {
            let id = parse_id(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Usage("`query` takes one node id".into()));
            }
            target.query(id).map(|b| format_belief(&b))
        })(),
        "stats" => {
            let c = target.counts();
            Ok(format!("stats mv={} mm={} flops={}", c.mat_vec, c.mat_mat, c.flops))
        }
        other => Err(Error::Usage(format!("unknown command `{other}`"))),
    };
    Some(out.unwrap_or_else(|e| format_error(&e)))
}

/// Reads commands until `quit` or end of input.
pub fn run<T: SessionTarget + ?Sized, R: BufRead, W: Write>(target: &mut T, input: R, mut output: W) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.split('#').next().unwrap().trim() == "quit" {
            break;
        }
        if let Some(reply) = respond(target, &line) {
            writeln!(output, "{reply}")?;
        }
    }
    output.flush()
}

/// Runs a whole script and returns the response lines.
pub fn run_script<T: SessionTarget + ?Sized>(target: &mut T, script: &str) -> Vec<String> {
    let mut out = Vec::new();
    run(target, script.as_bytes(), &mut out).expect("in-memory io");
    String::from_utf8(out).unwrap().lines().map(str::to_string).collect()
}

/// Parses the floats of a `bel` line.
pub fn parse_belief(line: &str) -> Option<Vec<f64>> {
    let rest = line.strip_prefix("bel")?;
    rest.split_whitespace().map(|f| f.parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_btn;
    use crate::gen;
    use crate::tree::NodeKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const THREE: &str = "BTN 1\nk 2\nnode 0 x\nnode 1 y\nnode 2 z\nroot 0\nprior 0 0.6 0.4\n\
        edge 0 1 0.9 0.1 0.2 0.8\nedge 0 2 0.7 0.3 0.4 0.6\n";

    #[test]
    fn prior_before_updates_and_protocol_shape() {
        let tree = parse_btn(THREE).unwrap();
        for kind in EngineKind::ALL {
            let mut t = TreeTarget::new(tree.clone(), kind).unwrap();
            let out = run_script(&mut t, "query 0\n\n# comment\nupdate 1 1 0\nquery 0\nstats\nbogus\nquery 9\nquery\nquit\nquery 0\n");
            assert_eq!(out.len(), 7, "{out:?}");
            let prior = parse_belief(&out[0]).unwrap();
            assert!((prior[0] - 0.6).abs() < 1e-15 && (prior[1] - 0.4).abs() < 1e-15, "{}", out[0]);
            assert_eq!(out[0].split(' ').nth(1).unwrap().len(), "6.0000000000000000e-1".len());
            assert_eq!(out[1], "ok");
            let b = parse_belief(&out[2]).unwrap();
            assert!((b[0] - 0.54 / 0.62).abs() < 1e-12);
            assert!(out[3].starts_with("stats mv="));
            assert!(out[4].starts_with("err ") && out[5].starts_with("err ") && out[6].starts_with("err "));
        }
    }

    #[test]
    fn inconsistent_evidence_is_reported_and_recoverable() {
        let text = THREE.replace("edge 0 1 0.9 0.1 0.2 0.8", "edge 0 1 1 0 1 0");
        let tree = parse_btn(&text).unwrap();
        for kind in EngineKind::ALL {
            let mut t = TreeTarget::new(tree.clone(), kind).unwrap();
            let out = run_script(&mut t, "update 1 0 1\nquery 0\nquery 2\nupdate 1 1 1\nquery 0\n");
            assert_eq!(&out[..3], ["ok", "err inconsistent", "err inconsistent"]);
            assert!(parse_belief(&out[4]).is_some());
        }
    }

    #[test]
    fn dummy_leaf_rejects_updates() {
        let text = "BTN 1\nk 2\nnode 0 x\nnode 1 y\nroot 0\nprior 0 0.5 0.5\nedge 0 1 0.9 0.1 0.2 0.8\n";
        let tree = parse_btn(text).unwrap();
        let dummy = tree.ids().find(|&x| tree.kind(x) == NodeKind::Dummy).unwrap();
        let id = tree.label(dummy);
        let mut t = TreeTarget::new(tree, EngineKind::Hierarchy).unwrap();
        let out = run_script(&mut t, &format!("query 0\nupdate {id} 0 1\nquery 0\nupdate 0 1 1\n"));
        assert!(out[1].starts_with("err "));
        assert_eq!(out[0], out[2]);
        assert!(out[3].starts_with("err "));
    }

    #[test]
    fn engines_agree_on_random_scripts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let tree = gen::random_binary_with(&mut rng, 12, 3, 0.3);
            let script = gen::random_script(&mut rng, &tree, 40);
            let outs: Vec<Vec<String>> = EngineKind::ALL
                .iter()
                .map(|&kind| run_script(&mut TreeTarget::new(tree.clone(), kind).unwrap(), &script))
                .collect();
            for other in &outs[1..] {
                assert_eq!(outs[0].len(), other.len());
                for (a, b) in outs[0].iter().zip(other) {
                    match (parse_belief(a), parse_belief(b)) {
                        (Some(x), Some(y)) => assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= 1e-9)),
                        _ => assert_eq!(a.split(' ').next(), b.split(' ').next(), "{a} vs {b}"),
                    }
                }
            }
        }
    }

    #[test]
    fn polytree_session() {
        let text = "PTN 1\nk 2\nnode 4 a\nnode 9 b\nprior 4 0.5 0.5\nparents 9 4\ncpt 9 0.9 0.1 0.2 0.8\n";
        let (pt, ids) = crate::format::parse_ptn_with_ids(text).unwrap();
        let mut t = PolytreeTarget::new(pt, &ids, EngineKind::Hierarchy).unwrap();
        let out = run_script(&mut t, "query 9\nupdate 9 1 0\nquery 4\nquery 0\n");
        assert_eq!(parse_belief(&out[0]).unwrap().iter().map(|x| (x * 1e9).round() / 1e9).collect::<Vec<_>>(), [0.55, 0.45]);
        assert_eq!(out[1], "ok");
        let b = parse_belief(&out[2]).unwrap();
        assert!((b[0] - 0.45 / 0.55).abs() < 1e-12);
        assert!(out[3].starts_with("err "));
    }
}
