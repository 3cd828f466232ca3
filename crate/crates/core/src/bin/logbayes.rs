use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use logbayes::bench::{self, BenchConfig, Shape};
use logbayes::contract::ContractionHierarchy;
use logbayes::exact::propagate_all;
use logbayes::format;
use logbayes::polytree::DEFAULT_MAX_PARENTS;
use logbayes::protein::{self, ChainModel, ProteinTables};
use logbayes::session::{self, PolytreeTarget, TreeTarget};
use logbayes::{EngineKind, Error, OpCounter, Result};

#[derive(Parser)]
#[command(name = "logbayes", version, about = "Logarithmic-time belief updates on causal trees and polytrees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a BTN, PTN or JTN model and summarize it.
    Check { file: PathBuf },
    /// Print the contraction hierarchy of a BTN model.
    ContractDump { file: PathBuf },
    /// Answer update/query commands from stdin against a BTN model.
    Session {
        file: PathBuf,
        #[arg(long, default_value = "hierarchy")]
        engine: EngineKind,
    },
    /// Scaling table as CSV on stdout.
    Bench {
        #[arg(long, default_value = "chain")]
        shape: Shape,
        /// Comma-separated node counts, ascending.
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 256, 1024, 4096])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        ops: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Engines to run, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = EngineKind::ALL)]
        engines: Vec<EngineKind>,
    },
    /// Matrix operations per update+query cycle, full propagation against
    /// the hierarchy, on a chain.
    CycleRatio {
        #[arg(long, default_value_t = 600)]
        nodes: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 500)]
        cycles: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Secondary-structure chains.
    #[command(subcommand)]
    Protein(ProteinCommand),
    /// Polytree models in PTN format.
    #[command(subcommand)]
    Polytree(PolytreeCommand),
}

#[derive(Subcommand)]
enum ProteinCommand {
    /// Estimate tables from a corpus and write them as JSON.
    Train {
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        w: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Predict the structure string of a sequence.
    Predict {
        tables: PathBuf,
        sequence: String,
    },
    /// Mutate one site and report beliefs at watched PS-nodes as CSV.
    Mutate {
        tables: PathBuf,
        sequence: String,
        #[arg(long)]
        site: usize,
        #[arg(long)]
        residue: char,
        /// Comma-separated PS-node indices.
        #[arg(long, value_delimiter = ',', required = true)]
        watch: Vec<usize>,
        #[arg(long, default_value = "hierarchy")]
        engine: EngineKind,
    },
}

#[derive(Subcommand)]
enum PolytreeCommand {
    /// Session over a PTN model; evidence may go on any variable.
    Session {
        file: PathBuf,
        #[arg(long, default_value = "hierarchy")]
        engine: EngineKind,
    },
    /// Scaling table on random polytrees.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 64, 256, 1024])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        max_parents: usize,
        #[arg(long, default_value_t = 200)]
        ops: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = EngineKind::ALL)]
        engines: Vec<EngineKind>,
    },
}

fn check(file: &PathBuf) -> Result<String> {
    let text = fs::read_to_string(file)?;
    let magic = text.split_whitespace().next().unwrap_or("");
    Ok(match magic {
        "PTN" => {
            let pt = format::parse_ptn(&text)?;
            let jt = pt.to_join_tree(DEFAULT_MAX_PARENTS.max(pt.max_in_degree()))?;
            format!(
                "ok polytree variables={} k={} max_parents={} cliques={} clique_domain={}",
                pt.len(),
                pt.k(),
                pt.max_in_degree(),
                jt.cliques().len(),
                jt.domain()
            )
        }
        "JTN" => {
            let jt = format::parse_jtn(&text)?;
            format!(
                "ok join-tree variables={} k={} cliques={} width={} max_separator={}",
                jt.var_count(),
                jt.k(),
                jt.cliques().len(),
                jt.width(),
                jt.max_separator()
            )
        }
        _ => {
            let tree = format::parse_btn(&text)?;
            propagate_all(&tree, &OpCounter::new())?;
            let h = ContractionHierarchy::build(&tree)?;
            let depth = tree.leaves().iter().map(|&l| tree.depth(l)).max().unwrap_or(0);
            format!(
                "ok tree nodes={} leaves={} k={} depth={} levels={} fresh_matrices={}",
                tree.len(),
                tree.leaves().len(),
                tree.dim(),
                depth,
                h.level_count(),
                h.fresh_matrix_count()
            )
        }
    })
}

fn load_tables(path: &PathBuf) -> Result<ProteinTables> {
    let t: ProteinTables = serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Invalid(e.to_string()))?;
    t.validate()?;
    Ok(t)
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Check { file } => writeln!(out, "{}", check(&file)?)?,
        Command::ContractDump { file } => {
            let tree = format::read_btn(file)?;
            let h = ContractionHierarchy::build(&tree)?;
            write!(out, "{}", h.dump(&tree))?;
        }
        Command::Session { file, engine } => {
            let mut t = TreeTarget::new(format::read_btn(file)?, engine)?;
            session::run(&mut t, io::stdin().lock(), out)?;
        }
        Command::Bench { shape, sizes, k, ops, seed, engines } => {
            let cfg = BenchConfig { shape, sizes, k, ops, seed, engines };
            write!(out, "{}", bench::to_csv(&bench::bench(&cfg)?))?;
        }
        Command::CycleRatio { nodes, k, cycles, seed } => {
            let r = bench::cycle_ratio(nodes, k, cycles, seed)?;
            writeln!(out, "nodes,k,cycles,full_ops_per_cycle,hierarchy_ops_per_cycle,ratio")?;
            writeln!(
                out,
                "{},{k},{},{:.1},{:.1},{:.2}",
                r.nodes,
                r.cycles,
                r.full_per_cycle,
                r.hierarchy_per_cycle,
                r.ratio()
            )?;
        }
        Command::Protein(ProteinCommand::Train { corpus, w, out: path }) => {
            let records = protein::parse_corpus(&fs::read_to_string(corpus)?)?;
            let tables = protein::train(&records, w)?;
            let json = serde_json::to_string(&tables).map_err(|e| Error::Invalid(e.to_string()))?;
            match path {
                Some(p) => fs::write(p, json)?,
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Protein(ProteinCommand::Predict { tables, sequence }) => {
            let m = ChainModel::new(&sequence, load_tables(&tables)?, EngineKind::Hierarchy)?;
            writeln!(out, "{}", m.predict()?)?;
        }
        Command::Protein(ProteinCommand::Mutate { tables, sequence, site, residue, watch, engine }) => {
            let tables = load_tables(&tables)?;
            let w = tables.w;
            let mut m = ChainModel::new(&sequence, tables, engine)?;
            let byte = u8::try_from(residue).map_err(|_| Error::Domain(format!("`{residue}` is not an amino-acid symbol")))?;
            let rows = m.mutagenesis(site, byte, &watch)?;
            write!(out, "{}", protein::report_csv(&rows, w))?;
        }
        Command::Polytree(PolytreeCommand::Session { file, engine }) => {
            let (pt, ids) = format::read_ptn_with_ids(file)?;
            let mut t = PolytreeTarget::new(pt, &ids, engine)?;
            session::run(&mut t, io::stdin().lock(), out)?;
        }
        Command::Polytree(PolytreeCommand::Bench { sizes, k, max_parents, ops, seed, engines }) => {
            let recs = bench::bench_polytree(&sizes, k, max_parents, ops, seed, &engines)?;
            write!(out, "{}", bench::to_csv(&recs))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("logbayes: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
