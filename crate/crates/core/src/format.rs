//! Line-oriented model files.
//!
//! All three formats share the lexical rules: one directive per line,
//! whitespace-separated fields, `#` starts a comment, ids are nonnegative
//! integers and probabilities are decimal floats.
//!
//! * BTN (causal trees): `BTN 1`, `k <int>`, `node <id> <name>`,
//!   `root <id>`, `prior <id> <k floats>`,
//!   `edge <parent> <child> <k·k floats, row = parent value>`,
//!   `evidence <leaf> <k floats>`. Two optional directives keep the node
//!   kinds introduced by binarization: `copy <id> <of-id>` and `dummy <id>`.
//! * PTN (polytrees): `PTN 1`, `k <int>`, `node <id> <name>`,
//!   `parents <id> <parent ids...>`, `cpt <id> <k^(p+1) floats>` with one row
//!   per parent tuple (first parent most significant), `prior <id> <k floats>`
//!   for parentless nodes.
//! * JTN (join trees): `JTN 1`, `k <int>`, `var <id> <name>`,
//!   `clique <id> <var ids...>`, `root <clique>`, `prior <clique> <floats>`,
//!   `edge <parent> <child> <L·K floats>` giving `p(child clique | separator)`
//!   with one row per separator value, and optionally `home <var> <clique>`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::jointree::{JoinTree, VarId};
use crate::linalg::Matrix;
use crate::polytree::Polytree;
use crate::tree::{CausalTree, NodeId, NodeKind, TreeBuilder};

/// Shortest text that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn push_floats(s: &mut String, xs: &[f64]) {
    for &x in xs {
        s.push(' ');
        s.push_str(&fmt_f64(x));
    }
}

struct Line<'a> {
    no: usize,
    fields: Vec<&'a str>,
}

impl<'a> Line<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax { line: self.no, message: message.into() }
    }

    fn arity(&self, n: usize) -> Result<()> {
        if self.fields.len() == n {
            Ok(())
        } else {
            Err(self.err(format!("`{}` takes {} fields, found {}", self.fields[0], n - 1, self.fields.len() - 1)))
        }
    }

    fn at_least(&self, n: usize) -> Result<()> {
        if self.fields.len() >= n {
            Ok(())
        } else {
            Err(self.err(format!("`{}` needs at least {} fields", self.fields[0], n - 1)))
        }
    }

    fn int(&self, i: usize) -> Result<u64> {
        self.fields[i].parse().map_err(|_| self.err(format!("`{}` is not a nonnegative integer", self.fields[i])))
    }

    fn floats(&self, from: usize) -> Result<Vec<f64>> {
        self.fields[from..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| self.err(format!("`{f}` is not a number"))))
            .collect()
    }

    fn floats_exact(&self, from: usize, n: usize) -> Result<Vec<f64>> {
        let v = self.floats(from)?;
        if v.len() != n {
            return Err(self.err(format!("expected {n} numbers, found {}", v.len())));
        }
        Ok(v)
    }
}

/// Tokenized lines after the header, and the line count for errors that
/// refer to the end of the file.
fn lex<'a>(text: &'a str, magic: &str) -> Result<(Vec<Line<'a>>, usize)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line { no: i + 1, fields: l.split('#').next().unwrap().split_whitespace().collect() })
        .filter(|l| !l.fields.is_empty());
    match lines.next() {
        Some(h) if h.fields == [magic, "1"] => {}
        Some(h) => return Err(h.err(format!("expected header `{magic} 1`"))),
        None => return Err(Error::Syntax { line: 1, message: format!("empty file, expected header `{magic} 1`") }),
    }
    Ok((lines.collect(), text.lines().count().max(1)))
}

fn take_k(lines: &[Line]) -> Result<(usize, usize)> {
    let mut k = None;
    for l in lines.iter().filter(|l| l.fields[0] == "k") {
        l.arity(2)?;
        if k.is_some() {
            return Err(l.err("duplicate `k` line"));
        }
        let v = l.int(1)? as usize;
        if v == 0 {
            return Err(l.err("k must be positive"));
        }
        k = Some((v, l.no));
    }
    k.ok_or_else(|| Error::Syntax { line: 1, message: "missing `k` line".into() })
}

fn read(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn parse_btn(text: &str) -> Result<CausalTree> {
    let (lines, end) = lex(text, "BTN")?;
    let (k, _) = take_k(&lines)?;
    let mut b = TreeBuilder::new(k);
    let mut ids: HashMap<u64, NodeId> = HashMap::new();
    let mut kinds: HashMap<u64, (usize, NodeKind)> = HashMap::new();
    let mut node_lines = Vec::new();
    for l in &lines {
        match l.fields[0] {
            "node" => {
                l.arity(3)?;
                node_lines.push(l);
            }
            "copy" => {
                l.arity(3)?;
                kinds.insert(l.int(1)?, (l.no, NodeKind::Copy { of: NodeId::new(usize::MAX) }));
            }
            "dummy" => {
                l.arity(2)?;
                kinds.insert(l.int(1)?, (l.no, NodeKind::Dummy));
            }
            "k" | "root" | "prior" | "edge" | "evidence" => {}
            other => return Err(l.err(format!("unknown directive `{other}`"))),
        }
    }
    // node ids are assigned in file order, so copy targets resolve up front
    let order: HashMap<u64, usize> = node_lines.iter().enumerate().map(|(i, l)| l.int(1).map(|id| (id, i))).collect::<Result<_>>()?;
    for l in &lines {
        if l.fields[0] == "copy" {
            let of = l.int(2)?;
            let &i = order.get(&of).ok_or_else(|| l.err(format!("copy of unknown node {of}")))?;
            kinds.insert(l.int(1)?, (l.no, NodeKind::Copy { of: NodeId::new(i) }));
        }
    }
    for l in &node_lines {
        let label = l.int(1)?;
        if ids.contains_key(&label) {
            return Err(l.err(format!("duplicate node {label}")));
        }
        let kind = kinds.remove(&label).map_or(NodeKind::Variable, |(_, k)| k);
        let id = b.add_node_with_kind(label, l.fields[2], kind).map_err(|e| l.err(e.to_string()))?;
        ids.insert(label, id);
    }
    if let Some((_, (no, _))) = kinds.into_iter().min_by_key(|(_, (no, _))| *no) {
        return Err(Error::Syntax { line: no, message: "node kind given for an undeclared node".into() });
    }
    let node = |l: &Line, i: usize| -> Result<NodeId> {
        let label = l.int(i)?;
        ids.get(&label).copied().ok_or_else(|| l.err(format!("unknown node {label}")))
    };
    let (mut root, mut prior) = (None, None);
    for l in &lines {
        match l.fields[0] {
            "root" => {
                l.arity(2)?;
                if root.replace(node(l, 1)?).is_some() {
                    return Err(l.err("duplicate `root` line"));
                }
            }
            "prior" => {
                l.at_least(2)?;
                if prior.replace((node(l, 1)?, l.floats_exact(2, k)?, l.no)).is_some() {
                    return Err(l.err("duplicate `prior` line"));
                }
            }
            "edge" => {
                l.at_least(3)?;
                let (p, c) = (node(l, 1)?, node(l, 2)?);
                let m = Matrix::new(k, k, l.floats_exact(3, k * k)?)?;
                b.add_edge(p, c, m).map_err(|e| l.err(e.to_string()))?;
            }
            "evidence" => {
                l.at_least(2)?;
                let x = node(l, 1)?;
                b.set_likelihood(x, l.floats_exact(2, k)?).map_err(|e| l.err(e.to_string()))?;
            }
            _ => {}
        }
    }
    let root = root.ok_or_else(|| Error::Syntax { line: end, message: "missing `root` line".into() })?;
    let (at, p, no) = prior.ok_or_else(|| Error::Syntax { line: end, message: "missing `prior` line".into() })?;
    if at != root {
        return Err(Error::Syntax { line: no, message: "the prior must be given for the root".into() });
    }
    b.set_root(root)?;
    b.set_prior(p)?;
    let tree = b.binarize()?;
    let violations = tree.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Invalid(list.join("; ")));
    }
    Ok(tree)
}

pub fn read_btn(path: impl AsRef<Path>) -> Result<CausalTree> {
    parse_btn(&read(path.as_ref())?)
}

pub fn write_btn(tree: &CausalTree) -> String {
    let mut s = format!("BTN 1\nk {}\n", tree.dim());
    for x in tree.ids() {
        let _ = writeln!(s, "node {} {}", tree.label(x), tree.name(x));
    }
    for x in tree.ids() {
        match tree.kind(x) {
            NodeKind::Copy { of } => {
                let _ = writeln!(s, "copy {} {}", tree.label(x), tree.label(of));
            }
            NodeKind::Dummy => {
                let _ = writeln!(s, "dummy {}", tree.label(x));
            }
            NodeKind::Variable => {}
        }
    }
    let root = tree.root();
    let _ = write!(s, "root {}\nprior {}", tree.label(root), tree.label(root));
    push_floats(&mut s, tree.prior());
    s.push('\n');
    for x in tree.preorder() {
        if let (Some(p), Some(m)) = (tree.parent(x), tree.edge(x)) {
            let _ = write!(s, "edge {} {}", tree.label(p), tree.label(x));
            push_floats(&mut s, m.data());
            s.push('\n');
        }
    }
    for x in tree.ids() {
        if tree.is_leaf(x) && tree.has_evidence(x) {
            let _ = write!(s, "evidence {}", tree.label(x));
            push_floats(&mut s, &tree.likelihood(x));
            s.push('\n');
        }
    }
    s
}

pub fn parse_ptn(text: &str) -> Result<Polytree> {
    parse_ptn_with_ids(text).map(|(pt, _)| pt)
}

/// The polytree and the file id of each variable.
pub fn parse_ptn_with_ids(text: &str) -> Result<(Polytree, Vec<u64>)> {
    let (lines, end) = lex(text, "PTN")?;
    let (k, _) = take_k(&lines)?;
    let mut index: HashMap<u64, VarId> = HashMap::new();
    let mut names = Vec::new();
    let mut ids = Vec::new();
    for l in lines.iter().filter(|l| l.fields[0] == "node") {
        l.arity(3)?;
        let id = l.int(1)?;
        if index.insert(id, names.len()).is_some() {
            return Err(l.err(format!("duplicate node {id}")));
        }
        names.push(l.fields[2].to_string());
        ids.push(id);
    }
    let var = |l: &Line, i: usize| -> Result<VarId> {
        let label = l.int(i)?;
        index.get(&label).copied().ok_or_else(|| l.err(format!("unknown node {label}")))
    };
    let n = names.len();
    let mut parents: Vec<Option<Vec<VarId>>> = vec![None; n];
    for l in &lines {
        match l.fields[0] {
            "parents" => {
                l.at_least(2)?;
                let v = var(l, 1)?;
                let ps = (2..l.fields.len()).map(|i| var(l, i)).collect::<Result<Vec<_>>>()?;
                if parents[v].replace(ps).is_some() {
                    return Err(l.err(format!("duplicate parents of {}", names[v])));
                }
            }
            "k" | "node" | "cpt" | "prior" => {}
            other => return Err(l.err(format!("unknown directive `{other}`"))),
        }
    }
    let parents: Vec<Vec<VarId>> = parents.into_iter().map(Option::unwrap_or_default).collect();
    let mut cpts: Vec<Option<Vec<f64>>> = vec![None; n];
    for l in lines.iter().filter(|l| matches!(l.fields[0], "cpt" | "prior")) {
        l.at_least(2)?;
        let v = var(l, 1)?;
        if l.fields[0] == "prior" && !parents[v].is_empty() {
            return Err(l.err(format!("{} has parents; give a `cpt` line", names[v])));
        }
        let len = k.pow(parents[v].len() as u32 + 1);
        if cpts[v].replace(l.floats_exact(2, len)?).is_some() {
            return Err(l.err(format!("duplicate table for {}", names[v])));
        }
    }
    let cpts = cpts
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or_else(|| Error::Syntax { line: end, message: format!("missing table for {}", names[v]) }))
        .collect::<Result<Vec<_>>>()?;
    Ok((Polytree::new(k, names, parents, cpts)?, ids))
}

pub fn read_ptn(path: impl AsRef<Path>) -> Result<Polytree> {
    parse_ptn(&read(path.as_ref())?)
}

pub fn read_ptn_with_ids(path: impl AsRef<Path>) -> Result<(Polytree, Vec<u64>)> {
    parse_ptn_with_ids(&read(path.as_ref())?)
}

pub fn write_ptn(pt: &Polytree) -> String {
    let mut s = format!("PTN 1\nk {}\n", pt.k());
    for v in 0..pt.len() {
        let _ = writeln!(s, "node {v} {}", pt.name(v));
    }
    for v in 0..pt.len() {
        if pt.parents(v).is_empty() {
            let _ = write!(s, "prior {v}");
        } else {
            let _ = write!(s, "parents {v}");
            for p in pt.parents(v) {
                let _ = write!(s, " {p}");
            }
            let _ = write!(s, "\ncpt {v}");
        }
        push_floats(&mut s, pt.cpt(v));
        s.push('\n');
    }
    s
}

pub fn parse_jtn(text: &str) -> Result<JoinTree> {
    let (lines, end) = lex(text, "JTN")?;
    let (k, _) = take_k(&lines)?;
    let mut vindex: HashMap<u64, VarId> = HashMap::new();
    let mut names = Vec::new();
    let mut cindex: HashMap<u64, usize> = HashMap::new();
    let mut cliques: Vec<Vec<VarId>> = Vec::new();
    for l in &lines {
        match l.fields[0] {
            "var" => {
                l.arity(3)?;
                if vindex.insert(l.int(1)?, names.len()).is_some() {
                    return Err(l.err(format!("duplicate variable {}", l.fields[1])));
                }
                names.push(l.fields[2].to_string());
            }
            "clique" | "k" | "root" | "prior" | "edge" | "home" => {}
            other => return Err(l.err(format!("unknown directive `{other}`"))),
        }
    }
    for l in lines.iter().filter(|l| l.fields[0] == "clique") {
        l.at_least(3)?;
        let members = (2..l.fields.len())
            .map(|i| {
                let id = l.int(i)?;
                vindex.get(&id).copied().ok_or_else(|| l.err(format!("unknown variable {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if cindex.insert(l.int(1)?, cliques.len()).is_some() {
            return Err(l.err(format!("duplicate clique {}", l.fields[1])));
        }
        cliques.push(members);
    }
    let m = cliques.len();
    let clique = |l: &Line, i: usize| -> Result<usize> {
        let id = l.int(i)?;
        cindex.get(&id).copied().ok_or_else(|| l.err(format!("unknown clique {id}")))
    };
    let mut parent = vec![None; m];
    let mut tables = vec![None; m];
    let (mut root, mut prior, mut home) = (None, None, None::<Vec<usize>>);
    for l in &lines {
        match l.fields[0] {
            "root" => {
                l.arity(2)?;
                if root.replace(clique(l, 1)?).is_some() {
                    return Err(l.err("duplicate `root` line"));
                }
            }
            "prior" => {
                l.at_least(2)?;
                let c = clique(l, 1)?;
                if prior.replace((c, l.floats_exact(2, k.pow(cliques[c].len() as u32))?, l.no)).is_some() {
                    return Err(l.err("duplicate `prior` line"));
                }
            }
            "edge" => {
                l.at_least(3)?;
                let (p, c) = (clique(l, 1)?, clique(l, 2)?);
                if parent[c].replace(p).is_some() {
                    return Err(l.err(format!("clique {} has two parents", l.fields[2])));
                }
                let sep = cliques[c].iter().filter(|v| cliques[p].contains(v)).count();
                let (rows, cols) = (k.pow(sep as u32), k.pow(cliques[c].len() as u32));
                tables[c] = Some(Matrix::new(rows, cols, l.floats_exact(3, rows * cols)?)?);
            }
            "home" => {
                l.arity(3)?;
                let id = l.int(1)?;
                let v = *vindex.get(&id).ok_or_else(|| l.err(format!("unknown variable {id}")))?;
                let c = clique(l, 2)?;
                let h = home.get_or_insert_with(|| (0..names.len()).map(|v| (0..m).find(|&i| cliques[i].contains(&v)).unwrap_or(0)).collect());
                h[v] = c;
            }
            _ => {}
        }
    }
    let root = root.ok_or_else(|| Error::Syntax { line: end, message: "missing `root` line".into() })?;
    let (at, prior, no) = prior.ok_or_else(|| Error::Syntax { line: end, message: "missing `prior` line".into() })?;
    if at != root {
        return Err(Error::Syntax { line: no, message: "the prior must be given for the root clique".into() });
    }
    if parent[root].is_some() {
        return Err(Error::Structure("the root clique has a parent edge".into()));
    }
    JoinTree::new(k, names, cliques, parent, tables, prior, home)
}

pub fn read_jtn(path: impl AsRef<Path>) -> Result<JoinTree> {
    parse_jtn(&read(path.as_ref())?)
}

pub fn write_jtn(jt: &JoinTree) -> String {
    let mut s = format!("JTN 1\nk {}\n", jt.k());
    for v in 0..jt.var_count() {
        let _ = writeln!(s, "var {v} {}", jt.var_name(v));
    }
    for (i, c) in jt.cliques().iter().enumerate() {
        let _ = write!(s, "clique {i}");
        for v in c.vars() {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let root = jt.root();
    let _ = write!(s, "root {root}\nprior {root}");
    push_floats(&mut s, &jt.prior());
    s.push('\n');
    for i in 0..jt.cliques().len() {
        if let (Some(p), Some(t)) = (jt.parent(i), jt.table(i)) {
            let _ = write!(s, "edge {p} {i}");
            push_floats(&mut s, t.data());
            s.push('\n');
        }
    }
    for v in 0..jt.var_count() {
        let first = jt.cliques().iter().position(|c| c.contains(v)).unwrap();
        if jt.home(v) != first {
            let _ = writeln!(s, "home {v} {}", jt.home(v));
        }
    }
    s
}
