//! Trains window tables on a labelled corpus, predicts a structure string,
//! then scans point mutations and reports which watched windows change
//! conformation, with the engine work each mutation costs.
//!
//! ```bash
//! cargo run --release --example protein_mutagenesis
//! ```

use logbayes::protein::{parse_corpus, report_csv, synthetic_corpus, train, ChainModel, AMINO_ACIDS};
use logbayes::{EngineKind, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/corpus.txt"))?;
    let corpus = parse_corpus(&text)?;
    let tables = train(&corpus, 2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let probe = synthetic_corpus(&mut rng, 1, 300).remove(0);
    let sequence = String::from_utf8(probe.residues).unwrap();
    let mut model = ChainModel::new(&sequence, tables.clone(), EngineKind::Hierarchy)?;
    let mut full = ChainModel::new(&sequence, tables, EngineKind::Full)?;
    let predicted = model.predict()?;
    let agree = predicted.bytes().zip(&probe.structure).filter(|(a, b)| a == *b).count();
    println!("{} residues, {} PS-nodes", sequence.len(), model.ps_nodes().len());
    println!("true      {}", String::from_utf8_lossy(&probe.structure[..60]));
    println!("predicted {}", &predicted[..60]);
    println!("per-residue agreement {:.1}%\n", 100.0 * agree as f64 / sequence.len() as f64);

    let watch = [40, 150, 260];
    let mut rows = Vec::new();
    let (h0, f0) = (model.counts(), full.counts());
    let mutations = 50;
    for _ in 0..mutations {
        let site = rng.gen_range(0..sequence.len());
        let residue = AMINO_ACIDS[rng.gen_range(0..20)];
        rows.extend(model.mutagenesis(site, residue, &watch)?);
        full.mutagenesis(site, residue, &watch)?;
    }
    let changed: Vec<_> = rows.iter().filter(|r| r.argmax_changed).collect();
    println!("{mutations} mutations, {} watched windows changed their most likely conformation", changed.len());
    let csv = report_csv(&rows, 2);
    for line in csv.lines().take(3) {
        println!("{}...", &line[..line.len().min(100)]);
    }
    let (h, f) = (model.counts() - h0, full.counts() - f0);
    println!(
        "\nmatrix ops per mutation: hierarchy {:.1}, full propagation {:.1}",
        h.matrix_ops() as f64 / mutations as f64,
        f.matrix_ops() as f64 / mutations as f64
    );
    Ok(())
}
