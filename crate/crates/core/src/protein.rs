//! Secondary-structure chains: a chain of structure windows (PS-nodes), each
//! with one evidence leaf for the amino-acid window observed at the same
//! place.
//!
//! A PS-node ranges over the `3^w` strings of length `w` over `h, e, c`,
//! encoded mixed-radix with the first symbol most significant and `h < e < c`.
//! E-nodes share that domain: the edge into an E-node is the identity and its
//! likelihood is the emission column `Pr(observed window | PS value)`, which
//! conditions the PS-node exactly as an observed amino-acid variable would.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{BeliefEngine, EngineKind};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, OpCounts, STOCHASTIC_TOL};
use crate::tree::{CausalTree, NodeId, TreeBuilder};

pub const STRUCTURE: &[u8; 3] = b"hec";
pub const AMINO_ACIDS: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";
pub const COIL: u8 = b'c';

fn structure_index(s: u8) -> Result<usize> {
    STRUCTURE
        .iter()
        .position(|&c| c == s)
        .ok_or_else(|| Error::Domain(format!("`{}` is not a structure symbol (h, e or c)", s as char)))
}

fn residue_index(a: u8) -> Result<usize> {
    AMINO_ACIDS
        .iter()
        .position(|&c| c == a.to_ascii_uppercase())
        .ok_or_else(|| Error::Domain(format!("`{}` is not an amino-acid symbol", a as char)))
}

fn check_window(w: usize) -> Result<()> {
    if w == 2 || w == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("window length must be 2 or 3, got {w}")))
    }
}

/// Index of a window over an alphabet of size `radix`.
fn encode(window: &[usize], radix: usize) -> usize {
    window.iter().fold(0, |acc, &d| acc * radix + d)
}

/// Structure window of a PS value.
pub fn structure_window(value: usize, w: usize) -> String {
    let mut out = vec![0u8; w];
    let mut rem = value;
    for slot in out.iter_mut().rev() {
        *slot = STRUCTURE[rem % 3];
        rem /= 3;
    }
    String::from_utf8(out).unwrap()
}

/// PS value of a structure window.
pub fn structure_value(window: &str) -> Result<usize> {
    let digits = window.bytes().map(structure_index).collect::<Result<Vec<_>>>()?;
    Ok(encode(&digits, 3))
}

/// One labelled sequence: residues and their structure symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub residues: Vec<u8>,
    pub structure: Vec<u8>,
}

impl Record {
    pub fn new(residues: &str, structure: &str) -> Result<Self> {
        if residues.len() != structure.len() {
            return Err(Error::Invalid(format!(
                "{} residues but {} structure symbols",
                residues.len(),
                structure.len()
            )));
        }
        for b in residues.bytes() {
            residue_index(b)?;
        }
        for b in structure.bytes() {
            structure_index(b)?;
        }
        Ok(Record { residues: residues.to_ascii_uppercase().into_bytes(), structure: structure.as_bytes().to_vec() })
    }
}

/// Reads `<residues> <structure>` records, one per line. Blank lines and
/// `#` comments are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let syntax = |message: String| Error::Syntax { line: i + 1, message };
        let [aa, ss] = fields[..] else {
            return Err(syntax("expected `<residues> <structure>`".into()));
        };
        out.push(Record::new(aa, ss).map_err(|e| syntax(e.to_string()))?);
    }
    Ok(out)
}

pub fn write_corpus(records: &[Record]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{} {}", String::from_utf8_lossy(&r.residues), String::from_utf8_lossy(&r.structure));
    }
    s
}

/// Synthetic corpus: structure drawn as runs of helix, sheet and coil, each
/// residue drawn from a structure-dependent preference over amino acids.
pub fn synthetic_corpus<R: Rng + ?Sized>(rng: &mut R, records: usize, len: usize) -> Vec<Record> {
    // helix formers, sheet formers, coil formers
    const PREFERRED: [&[u8]; 3] = [b"AELMQKRH", b"VIYFWTC", b"GPNDS"];
    (0..records)
        .map(|_| {
            let mut structure = Vec::with_capacity(len);
            while structure.len() < len {
                let s = rng.gen_range(0..3);
                let run = match s {
                    0 => rng.gen_range(4..12),
                    1 => rng.gen_range(3..7),
                    _ => rng.gen_range(2..6),
                };
                structure.extend(std::iter::repeat_n(STRUCTURE[s], run));
            }
            structure.truncate(len);
            let residues = structure
                .iter()
                .map(|&s| {
                    let pool = PREFERRED[structure_index(s).unwrap()];
                    if rng.gen_bool(0.7) {
                        pool[rng.gen_range(0..pool.len())]
                    } else {
                        AMINO_ACIDS[rng.gen_range(0..20)]
                    }
                })
                .collect();
            Record { residues, structure }
        })
        .collect()
}

/// Trained chain parameters. `transition` is `k × k` and `emission` is
/// `k × 20^w`, both row-major with `k = 3^w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProteinTables {
    pub w: usize,
    pub prior: Vec<f64>,
    pub transition: Vec<f64>,
    pub emission: Vec<f64>,
}

impl ProteinTables {
    pub fn k(&self) -> usize {
        3usize.pow(self.w as u32)
    }

    pub fn residue_windows(&self) -> usize {
        20usize.pow(self.w as u32)
    }

    pub fn transition_matrix(&self) -> Matrix {
        Matrix::new(self.k(), self.k(), self.transition.clone()).expect("checked shape")
    }

    /// `Pr(window | PS = v)` for every `v`.
    pub fn emission_column(&self, window: &[u8]) -> Result<Vec<f64>> {
        if window.len() != self.w {
            return Err(Error::Dimension { expected: self.w, found: window.len() });
        }
        let digits = window.iter().map(|&a| residue_index(a)).collect::<Result<Vec<_>>>()?;
        let col = encode(&digits, 20);
        let m = self.residue_windows();
        Ok((0..self.k()).map(|v| self.emission[v * m + col]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        check_window(self.w)?;
        let (k, m) = (self.k(), self.residue_windows());
        for (name, data, cols) in [("prior", &self.prior, k), ("transition", &self.transition, k), ("emission", &self.emission, m)] {
            if data.len() % cols != 0 || data.len() / cols != if name == "prior" { 1 } else { k } {
                return Err(Error::Invalid(format!("{name} table has {} entries", data.len())));
            }
            for row in data.chunks(cols) {
                let s: f64 = row.iter().sum();
                if row.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::Invalid(format!("{name} table has a row that is not a distribution")));
                }
            }
        }
        Ok(())
    }
}

/// Whether PS value `b` can follow `a`: the last `w - 1` symbols of `a` are
/// the first `w - 1` of `b`.
pub fn overlaps(a: usize, b: usize, w: usize) -> bool {
    let tail = 3usize.pow(w as u32 - 1);
    a % tail == b / 3
}

/// Add-one smoothed frequency estimates over all windows of the corpus.
/// Transitions between windows that disagree on their overlap stay zero.
pub fn train(corpus: &[Record], w: usize) -> Result<ProteinTables> {
    check_window(w)?;
    if corpus.is_empty() {
        return Err(Error::Invalid("empty corpus".into()));
    }
    let k = 3usize.pow(w as u32);
    let m = 20usize.pow(w as u32);
    let mut prior = vec![1.0; k];
    let mut transition: Vec<f64> = (0..k * k).map(|i| if overlaps(i / k, i % k, w) { 1.0 } else { 0.0 }).collect();
    let mut emission = vec![1.0; k * m];
    for r in corpus {
        if r.residues.len() < w {
            continue;
        }
        let ps: Vec<usize> = r
            .structure
            .windows(w)
            .map(|win| encode(&win.iter().map(|&s| structure_index(s).unwrap()).collect::<Vec<_>>(), 3))
            .collect();
        let aa: Vec<usize> = r
            .residues
            .windows(w)
            .map(|win| encode(&win.iter().map(|&a| residue_index(a).unwrap()).collect::<Vec<_>>(), 20))
            .collect();
        for (t, (&p, &a)) in ps.iter().zip(&aa).enumerate() {
            prior[p] += 1.0;
            emission[p * m + a] += 1.0;
            if let Some(&q) = ps.get(t + 1) {
                transition[p * k + q] += 1.0;
            }
        }
    }
    let normalize_rows = |data: &mut Vec<f64>, cols: usize| {
        for row in data.chunks_mut(cols) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
        }
    };
    normalize_rows(&mut prior, k);
    normalize_rows(&mut transition, k);
    normalize_rows(&mut emission, m);
    Ok(ProteinTables { w, prior, transition, emission })
}

/// Chain over `residues`: PS-nodes `ps1..psn` (`n = len - w + 1`), `ps_t`
/// with children `e_t` and `ps_{t+1}`, each `e_t` carrying the emission
/// column of its window. Returns the tree with the PS and E node ids.
pub fn build_chain(residues: &[u8], tables: &ProteinTables) -> Result<(CausalTree, Vec<NodeId>, Vec<NodeId>)> {
    let w = tables.w;
    if residues.len() < w {
        return Err(Error::Invalid(format!("sequence of length {} is shorter than the window {w}", residues.len())));
    }
    let k = tables.k();
    let n = residues.len() - w + 1;
    let mut b = TreeBuilder::new(k);
    let ps: Vec<NodeId> = (1..=n).map(|t| b.add_variable(format!("ps{t}"))).collect();
    let es: Vec<NodeId> = (1..=n).map(|t| b.add_variable(format!("e{t}"))).collect();
    let trans = tables.transition_matrix();
    for t in 0..n {
        b.add_edge(ps[t], es[t], Matrix::identity(k))?;
        b.set_likelihood(es[t], tables.emission_column(&residues[t..t + w])?)?;
        if t + 1 < n {
            b.add_edge(ps[t], ps[t + 1], trans.clone())?;
        }
    }
    b.set_root(ps[0])?;
    b.set_prior(tables.prior.clone())?;
    Ok((b.binarize()?, ps, es))
}

/// Index of the largest entry, ties going to the highest index, which is
/// the window with the most trailing coil.
fn argmax_toward_coil(bel: &[f64]) -> usize {
    let max = bel.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    bel.iter().rposition(|&x| x >= max - 1e-12 * max.abs()).unwrap_or(0)
}

/// Per-position structure from window values: majority over the windows
/// covering each position, any tie resolved to coil.
pub fn decode(windows: &[usize], w: usize) -> String {
    if windows.is_empty() {
        return String::new();
    }
    let len = windows.len() + w - 1;
    let strings: Vec<Vec<u8>> = windows.iter().map(|&v| structure_window(v, w).into_bytes()).collect();
    (0..len)
        .map(|i| {
            let mut votes = [0usize; 3];
            for t in i.saturating_sub(w - 1)..=i.min(windows.len() - 1) {
                votes[structure_index(strings[t][i - t]).unwrap()] += 1;
            }
            let best = *votes.iter().max().unwrap();
            if votes.iter().filter(|&&v| v == best).count() > 1 {
                COIL as char
            } else {
                STRUCTURE[votes.iter().position(|&v| v == best).unwrap()] as char
            }
        })
        .collect()
}

/// Before/after beliefs of one watched PS-node for one mutation.
#[derive(Clone, Debug, PartialEq)]
pub struct MutationRow {
    pub site: usize,
    pub watch_site: usize,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub argmax_changed: bool,
}

/// A sequence with its chain loaded into an engine.
pub struct ChainModel {
    tables: ProteinTables,
    residues: Vec<u8>,
    tree: CausalTree,
    ps: Vec<NodeId>,
    es: Vec<NodeId>,
    engine: Box<dyn BeliefEngine + Send + Sync>,
}

impl ChainModel {
    pub fn new(residues: &str, tables: ProteinTables, kind: EngineKind) -> Result<Self> {
        tables.validate()?;
        let residues = residues.to_ascii_uppercase().into_bytes();
        let (tree, ps, es) = build_chain(&residues, &tables)?;
        let engine = kind.build(tree.clone())?;
        Ok(ChainModel { tables, residues, tree, ps, es, engine })
    }

    pub fn tables(&self) -> &ProteinTables {
        &self.tables
    }

    pub fn residues(&self) -> &[u8] {
        &self.residues
    }

    /// The chain as built, before any mutation.
    pub fn initial_tree(&self) -> &CausalTree {
        &self.tree
    }

    pub fn ps_nodes(&self) -> &[NodeId] {
        &self.ps
    }

    pub fn e_nodes(&self) -> &[NodeId] {
        &self.es
    }

    pub fn engine(&self) -> &dyn BeliefEngine {
        self.engine.as_ref()
    }

    pub fn counts(&self) -> OpCounts {
        self.engine.counts()
    }

    fn ps_node(&self, site: usize) -> Result<NodeId> {
        self.ps
            .get(site)
            .copied()
            .ok_or_else(|| Error::Lookup(format!("watch site {site} outside 0..{}", self.ps.len())))
    }

    /// Belief over structure windows at PS-node `site` (0-based).
    pub fn window_belief(&self, site: usize) -> Result<Vec<f64>> {
        self.engine.belief(self.ps_node(site)?)
    }

    pub fn predict(&self) -> Result<String> {
        let windows = (0..self.ps.len())
            .map(|t| self.window_belief(t).map(|b| argmax_toward_coil(&b)))
            .collect::<Result<Vec<_>>>()?;
        Ok(decode(&windows, self.tables.w))
    }

    /// Replaces residue `site` and reposts the evidence of every window
    /// covering it. Returns the E-nodes updated.
    pub fn mutate(&mut self, site: usize, residue: u8) -> Result<Vec<NodeId>> {
        if site >= self.residues.len() {
            return Err(Error::Lookup(format!("site {site} outside 0..{}", self.residues.len())));
        }
        residue_index(residue)?;
        self.residues[site] = residue.to_ascii_uppercase();
        let w = self.tables.w;
        let first = site.saturating_sub(w - 1);
        let last = site.min(self.ps.len() - 1);
        let mut touched = Vec::new();
        for t in first..=last {
            let lik = self.tables.emission_column(&self.residues[t..t + w])?;
            self.engine.update(self.es[t], &lik)?;
            touched.push(self.es[t]);
        }
        Ok(touched)
    }

    /// Mutates `site` and reports the watched PS-nodes before and after.
    pub fn mutagenesis(&mut self, site: usize, residue: u8, watch: &[usize]) -> Result<Vec<MutationRow>> {
        let before = watch.iter().map(|&s| self.window_belief(s)).collect::<Result<Vec<_>>>()?;
        self.mutate(site, residue)?;
        watch
            .iter()
            .zip(before)
            .map(|(&s, before)| {
                let after = self.window_belief(s)?;
                let argmax_changed = argmax_toward_coil(&before) != argmax_toward_coil(&after);
                Ok(MutationRow { site, watch_site: s, before, after, argmax_changed })
            })
            .collect()
    }
}

/// CSV with one belief column per structure window before and after.
pub fn report_csv(rows: &[MutationRow], w: usize) -> String {
    let k = 3usize.pow(w as u32);
    let mut s = String::from("site,watch_site");
    for when in ["before", "after"] {
        for v in 0..k {
            let _ = write!(s, ",bel_{when}_{}", structure_window(v, w));
        }
    }
    s.push_str(",argmax_changed\n");
    for r in rows {
        let _ = write!(s, "{},{}", r.site, r.watch_site);
        for x in r.before.iter().chain(&r.after) {
            let _ = write!(s, ",{x:.16e}");
        }
        let _ = writeln!(s, ",{}", r.argmax_changed);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::propagate_all;
    use crate::linalg::OpCounter;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gsat() -> Vec<Record> {
        vec![Record::new("GSAT", "cchh").unwrap()]
    }

    #[test]
    fn windows_of_the_gsat_example() {
        let r = &gsat()[0];
        let ps: Vec<String> = r.structure.windows(2).map(|w| String::from_utf8(w.to_vec()).unwrap()).collect();
        let aa: Vec<String> = r.residues.windows(2).map(|w| String::from_utf8(w.to_vec()).unwrap()).collect();
        assert_eq!(ps, ["cc", "ch", "hh"]);
        assert_eq!(aa, ["GS", "SA", "AT"]);
        let tables = train(&gsat(), 2).unwrap();
        let (tree, ps, es) = build_chain(b"GSAT", &tables).unwrap();
        assert_eq!((ps.len(), es.len()), (3, 3));
        assert!(tree.validate().is_empty());
        for t in 0..3 {
            assert_eq!(tree.parent(es[t]), Some(ps[t]));
        }
        assert_eq!(tree.parent(ps[1]), Some(ps[0]));
    }

    #[test]
    fn encoding_round_trips() {
        for w in [2, 3] {
            for v in 0..3usize.pow(w as u32) {
                assert_eq!(structure_value(&structure_window(v, w)).unwrap(), v);
            }
        }
        assert_eq!(structure_window(0, 2), "hh");
        assert_eq!(structure_window(8, 2), "cc");
        assert!(overlaps(structure_value("ch").unwrap(), structure_value("hh").unwrap(), 2));
        assert!(!overlaps(structure_value("ch").unwrap(), structure_value("ch").unwrap(), 2));
    }

    #[test]
    fn training_errors_and_stochasticity() {
        assert!(matches!(train(&[], 2), Err(Error::Invalid(_))));
        assert!(matches!(train(&gsat(), 4), Err(Error::Domain(_))));
        assert!(matches!(Record::new("GSAT", "cch"), Err(Error::Invalid(_))));
        assert!(matches!(Record::new("GSAX", "cchh"), Err(Error::Domain(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for w in [2, 3] {
            let t = train(&synthetic_corpus(&mut rng, 5, 40), w).unwrap();
            t.validate().unwrap();
            for a in 0..t.k() {
                for b in 0..t.k() {
                    if !overlaps(a, b, w) {
                        assert_eq!(t.transition[a * t.k() + b], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_corpus_concentrates_transitions() {
        let corpus = vec![Record::new(&"A".repeat(200), &"h".repeat(200)).unwrap()];
        let t = train(&corpus, 2).unwrap();
        let hh = structure_value("hh").unwrap();
        assert!(t.transition[hh * 9 + hh] > 0.98);
        assert!(t.prior[hh] > 0.9);
    }

    #[test]
    fn recovers_its_training_example() {
        let tables = train(&gsat(), 2).unwrap();
        let m = ChainModel::new("GSAT", tables, EngineKind::Hierarchy).unwrap();
        assert_eq!(m.predict().unwrap(), "cchh");
    }

    #[test]
    fn uniform_tables_predict_coil() {
        for w in [2, 3] {
            let k = 3usize.pow(w as u32);
            let m = 20usize.pow(w as u32);
            let transition = (0..k * k).map(|i| if overlaps(i / k, i % k, w) { 1.0 / 3.0 } else { 0.0 }).collect();
            let tables = ProteinTables { w, prior: vec![1.0 / k as f64; k], transition, emission: vec![1.0 / m as f64; k * m] };
            let model = ChainModel::new("MKVLAAGIT", tables, EngineKind::Hierarchy).unwrap();
            assert_eq!(model.predict().unwrap(), "ccccccccc");
        }
    }

    #[test]
    fn decode_votes() {
        let v = |s: &str| structure_value(s).unwrap();
        assert_eq!(decode(&[v("cc"), v("ch"), v("hh")], 2), "cchh");
        // position 1 sees h from the first window and e from the second
        assert_eq!(decode(&[v("hh"), v("ee")], 2), "hce");
        assert_eq!(decode(&[v("hhh"), v("hhe"), v("hee")], 3), "hhhee");
    }

    #[test]
    fn prediction_matches_full_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let corpus = synthetic_corpus(&mut rng, 20, 60);
        let tables = train(&corpus, 2).unwrap();
        let probe = synthetic_corpus(&mut rng, 1, 80).remove(0);
        let seq = String::from_utf8(probe.residues).unwrap();
        let m = ChainModel::new(&seq, tables.clone(), EngineKind::Hierarchy).unwrap();
        let p = propagate_all(m.initial_tree(), &OpCounter::new()).unwrap();
        for (t, &x) in m.ps_nodes().iter().enumerate() {
            assert_eq!(argmax_toward_coil(&m.window_belief(t).unwrap()), argmax_toward_coil(p.belief(x)));
        }
        let again = ChainModel::new(&seq, tables, EngineKind::Hierarchy).unwrap();
        assert_eq!(m.predict().unwrap(), again.predict().unwrap());
    }

    #[test]
    fn mutagenesis_is_reversible_and_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tables = train(&synthetic_corpus(&mut rng, 20, 60), 3).unwrap();
        let seq = String::from_utf8(synthetic_corpus(&mut rng, 1, 50).remove(0).residues).unwrap();
        let mut m = ChainModel::new(&seq, tables.clone(), EngineKind::Hierarchy).unwrap();
        let watch = [0, 10, 24, 47];
        let start: Vec<Vec<f64>> = watch.iter().map(|&s| m.window_belief(s).unwrap()).collect();
        for _ in 0..15 {
            let site = rng.gen_range(0..seq.len());
            let old = m.residues()[site];
            let new = AMINO_ACIDS[rng.gen_range(0..20)];
            let rows = m.mutagenesis(site, new, &watch).unwrap();
            assert!(rows.iter().all(|r| r.site == site));
            let (tree, ps, _) = build_chain(m.residues(), &tables).unwrap();
            let p = propagate_all(&tree, &OpCounter::new()).unwrap();
            for r in &rows {
                let want = p.belief(ps[r.watch_site]);
                assert!(r.after.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-9));
            }
            let same = m.mutagenesis(site, new, &watch).unwrap();
            for r in same {
                assert!(r.before.iter().zip(&r.after).all(|(a, b)| (a - b).abs() <= 1e-12));
                assert!(!r.argmax_changed);
            }
            m.mutate(site, old).unwrap();
        }
        for (&s, b) in watch.iter().zip(start) {
            let now = m.window_belief(s).unwrap();
            assert!(now.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12));
        }
        assert!(matches!(m.mutate(seq.len(), b'A'), Err(Error::Lookup(_))));
        assert!(matches!(m.mutagenesis(0, b'A', &[99]), Err(Error::Lookup(_))));
        assert!(matches!(m.mutate(0, b'Z'), Err(Error::Domain(_))));
    }

    #[test]
    fn minimal_chain_and_report() {
        let tables = train(&gsat(), 2).unwrap();
        let (tree, ps, es) = build_chain(b"GS", &tables).unwrap();
        assert_eq!((ps.len(), es.len()), (1, 1));
        assert!(tree.validate().is_empty());
        assert!(matches!(build_chain(b"G", &tables), Err(Error::Invalid(_))));
        let mut m = ChainModel::new("GSAT", tables, EngineKind::Full).unwrap();
        let rows = m.mutagenesis(1, b'W', &[0, 2]).unwrap();
        let csv = report_csv(&rows, 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("site,watch_site,bel_before_hh,"));
        assert!(lines[0].ends_with("bel_after_cc,argmax_changed"));
        assert_eq!(lines[1].split(',').count(), 2 + 18 + 1);
    }

    #[test]
    fn corpus_parsing() {
        let text = "# demo\nGSAT cchh\n\nmkv hec  # trailing\n";
        let c = parse_corpus(text).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].residues, b"MKV");
        assert_eq!(parse_corpus(&write_corpus(&c)).unwrap(), c);
        assert!(matches!(parse_corpus("GSAT\n"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_corpus("\nGSAT cchx\n"), Err(Error::Syntax { line: 2, .. })));
    }
}
