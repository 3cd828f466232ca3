//! Scaling tables: instrumented operation counts and wall time per engine,
//! model size and operation kind.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{BeliefEngine, EngineKind};
use crate::error::{Error, Result};
use crate::gen;
use crate::jointree::FactoredMatrix;
use crate::linalg::OpCounts;
use crate::polytree::PolytreeEngine;
use crate::tree::{CausalTree, NodeId};

pub const CSV_HEADER: &str = "engine,shape,N,k,op,count_mv,count_mm,ns_total,ns_per_op";

/// Largest model the harness will build, in nodes.
pub const MAX_NODES: usize = 1 << 22;

/// Largest model the harness will build, in stored matrix entries.
pub const MAX_ENTRIES: usize = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Chain,
    Balanced,
    Random,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Chain => "chain",
            Shape::Balanced => "balanced",
            Shape::Random => "random",
        }
    }

    /// Binary tree of this shape with `size` nodes, rounded up to odd.
    pub fn build<R: Rng + ?Sized>(self, size: usize, k: usize, rng: &mut R) -> CausalTree {
        let leaves = (size / 2 + 1).max(2);
        match self {
            Shape::Chain => gen::chain(leaves - 1, k, rng),
            Shape::Balanced => gen::balanced(leaves, k, rng),
            Shape::Random => gen::random_binary(rng, leaves, k),
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Shape::Chain),
            "balanced" => Ok(Shape::Balanced),
            "random" => Ok(Shape::Random),
            _ => Err(Error::Usage(format!("unknown shape `{s}` (chain, balanced or random)"))),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Build,
    Update,
    Query,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Build => "build",
            Op::Update => "update",
            Op::Query => "query",
        }
    }
}

/// One cell of the table. `count` is the number of operations measured.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub engine: &'static str,
    pub shape: String,
    pub n: usize,
    pub k: usize,
    pub op: Op,
    pub count: u64,
    pub mat_vec: u64,
    pub mat_mat: u64,
    pub ns_total: u128,
}

impl BenchRecord {
    pub fn ns_per_op(&self) -> u128 {
        self.ns_total / u128::from(self.count.max(1))
    }

    pub fn mv_per_op(&self) -> f64 {
        self.mat_vec as f64 / self.count.max(1) as f64
    }

    pub fn mm_per_op(&self) -> f64 {
        self.mat_mat as f64 / self.count.max(1) as f64
    }

    /// The record with timing columns zeroed.
    pub fn untimed(&self) -> BenchRecord {
        BenchRecord { ns_total: 0, ..self.clone() }
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.engine,
            r.shape,
            r.n,
            r.k,
            r.op.name(),
            r.mat_vec,
            r.mat_mat,
            r.ns_total,
            r.ns_per_op()
        );
    }
    s
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub shape: Shape,
    pub sizes: Vec<usize>,
    pub k: usize,
    /// Operations per size; updates and queries alternate.
    pub ops: usize,
    pub seed: u64,
    pub engines: Vec<EngineKind>,
}

impl BenchConfig {
    pub fn new(shape: Shape, sizes: Vec<usize>, k: usize, ops: usize, seed: u64) -> Self {
        BenchConfig { shape, sizes, k, ops, seed, engines: EngineKind::ALL.to_vec() }
    }
}

fn check_scale(n: usize, k: usize) -> Result<()> {
    if n > MAX_NODES || n.saturating_mul(k).saturating_mul(k).saturating_mul(3) > MAX_ENTRIES {
        return Err(Error::Scale(format!("{n} nodes with k = {k} exceeds the benchmark limit")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
enum Step {
    Update(NodeId, Vec<f64>),
    Query(NodeId),
}

fn script(rng: &mut ChaCha8Rng, tree: &CausalTree, ops: usize) -> Vec<Step> {
    let leaves = tree.evidence_leaves();
    let nodes: Vec<NodeId> = tree.ids().collect();
    (0..ops)
        .map(|i| {
            if i % 2 == 0 {
                Step::Update(leaves[rng.gen_range(0..leaves.len())], gen::random_likelihood(rng, tree.dim()))
            } else {
                Step::Query(nodes[rng.gen_range(0..nodes.len())])
            }
        })
        .collect()
}

/// Runs a script on a built engine and returns update and query cells.
fn measure<E: BeliefEngine + ?Sized>(engine: &mut E, steps: &[Step]) -> Result<[(u64, OpCounts, u128); 2]> {
    let mut cells = [(0u64, OpCounts::default(), 0u128); 2];
    for step in steps {
        let before = engine.counts();
        let start = Instant::now();
        let slot = match step {
            Step::Update(leaf, lik) => {
                engine.update(*leaf, lik)?;
                0
            }
            Step::Query(x) => {
                std::hint::black_box(engine.belief(*x)?);
                1
            }
        };
        let ns = start.elapsed().as_nanos();
        let d = engine.counts() - before;
        let c = &mut cells[slot];
        c.0 += 1;
        c.1.mat_vec += d.mat_vec;
        c.1.mat_mat += d.mat_mat;
        c.2 += ns;
    }
    Ok(cells)
}

fn cells_to_records(
    engine: &'static str,
    shape: &str,
    n: usize,
    k: usize,
    build: (OpCounts, u128),
    cells: [(u64, OpCounts, u128); 2],
) -> Vec<BenchRecord> {
    let rec = |op, count, c: OpCounts, ns| BenchRecord {
        engine,
        shape: shape.to_string(),
        n,
        k,
        op,
        count,
        mat_vec: c.mat_vec,
        mat_mat: c.mat_mat,
        ns_total: ns,
    };
    vec![
        rec(Op::Build, 1, build.0, build.1),
        rec(Op::Update, cells[0].0, cells[0].1, cells[0].2),
        rec(Op::Query, cells[1].0, cells[1].1, cells[1].2),
    ]
}

/// Records ordered by size, then engine, then build/update/query. With
/// `ops == 0` nothing is measured.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.k == 0 {
        return Err(Error::Usage("k must be positive".into()));
    }
    if cfg.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Usage("sizes must be ascending".into()));
    }
    for &n in &cfg.sizes {
        check_scale(n, cfg.k)?;
    }
    let mut out = Vec::new();
    if cfg.ops == 0 {
        return Ok(out);
    }
    for &size in &cfg.sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (size as u64).rotate_left(32));
        let tree = cfg.shape.build(size, cfg.k, &mut rng);
        let steps = script(&mut rng, &tree, cfg.ops);
        for &kind in &cfg.engines {
            let start = Instant::now();
            let mut engine = kind.build(tree.clone())?;
            let build = (engine.counts() + engine.build_counts(), start.elapsed().as_nanos());
            let cells = measure(engine.as_mut(), &steps)?;
            out.extend(cells_to_records(kind.name(), cfg.shape.name(), tree.len(), cfg.k, build, cells));
        }
    }
    Ok(out)
}

/// Same table for random polytrees of the given variable counts.
pub fn bench_polytree(sizes: &[usize], k: usize, max_parents: usize, ops: usize, seed: u64, engines: &[EngineKind]) -> Result<Vec<BenchRecord>> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Usage("sizes must be ascending".into()));
    }
    for &n in sizes {
        check_scale(n.saturating_mul(k.pow(max_parents as u32 + 1)), 1)?;
    }
    let mut out = Vec::new();
    if ops == 0 {
        return Ok(out);
    }
    for &n in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
        let pt = gen::random_polytree(&mut rng, n.max(1), k, max_parents, 0.0);
        let steps: Vec<(bool, usize, Vec<f64>)> = (0..ops)
            .map(|i| (i % 2 == 0, rng.gen_range(0..pt.len()), gen::random_likelihood(&mut rng, k)))
            .collect();
        for &kind in engines {
            let start = Instant::now();
            let mut engine = PolytreeEngine::<FactoredMatrix>::new(pt.clone(), kind)?;
            let build = (engine.counts(), start.elapsed().as_nanos());
            let mut cells = [(0u64, OpCounts::default(), 0u128); 2];
            for (update, v, lik) in &steps {
                let before = engine.counts();
                let t = Instant::now();
                if *update {
                    engine.pt_update(*v, lik)?;
                } else {
                    std::hint::black_box(engine.pt_query(*v)?);
                }
                let ns = t.elapsed().as_nanos();
                let d = engine.counts() - before;
                let c = &mut cells[usize::from(!*update)];
                c.0 += 1;
                c.1.mat_vec += d.mat_vec;
                c.1.mat_mat += d.mat_mat;
                c.2 += ns;
            }
            out.extend(cells_to_records(kind.name(), "polytree", n, k, build, cells));
        }
    }
    Ok(out)
}

/// Matrix operations per sense/evaluate cycle (one update, one query) of
/// full propagation against the hierarchy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleReport {
    pub nodes: usize,
    pub cycles: usize,
    pub full_per_cycle: f64,
    pub hierarchy_per_cycle: f64,
}

impl CycleReport {
    pub fn ratio(&self) -> f64 {
        self.full_per_cycle / self.hierarchy_per_cycle
    }
}

/// Runs `cycles` update-then-query cycles on a chain of about `nodes`
/// nodes under both engines.
pub fn cycle_ratio(nodes: usize, k: usize, cycles: usize, seed: u64) -> Result<CycleReport> {
    check_scale(nodes, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = Shape::Chain.build(nodes, k, &mut rng);
    let steps = script(&mut rng, &tree, 2 * cycles);
    let mut per_cycle = [0.0; 2];
    for (slot, kind) in [EngineKind::Full, EngineKind::Hierarchy].into_iter().enumerate() {
        let mut engine = kind.build(tree.clone())?;
        let before = engine.counts();
        measure(engine.as_mut(), &steps)?;
        per_cycle[slot] = (engine.counts() - before).matrix_ops() as f64 / cycles.max(1) as f64;
    }
    Ok(CycleReport { nodes: tree.len(), cycles, full_per_cycle: per_cycle[0], hierarchy_per_cycle: per_cycle[1] })
}
