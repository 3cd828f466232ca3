use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use logbayes::session::parse_belief;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logbayes"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("logbayes-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_with_input(args: &[&str], input: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_accepts_all_three_formats() {
    for (file, prefix) in [
        ("chain4.btn", "ok tree nodes=9 leaves=5 k=2"),
        ("sprinkler.ptn", "ok polytree variables=4"),
        ("three_cliques.jtn", "ok join-tree variables=4"),
    ] {
        let o = run(&["check", data(file).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{file}");
        assert!(stdout(&o).starts_with(prefix), "{}", stdout(&o));
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let bad = scratch("bad.btn");
    fs::write(&bad, "BTN 1\nk 2\nnode 0 a\nprior 0 0.5 0.5\n").unwrap();
    let o = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("root"));

    let missing = scratch("missing.btn");
    assert_eq!(run(&["check", missing.to_str().unwrap()]).status.code(), Some(2));

    let zero = scratch("zero.btn");
    fs::write(
        &zero,
        "BTN 1\nk 2\nnode 0 x\nnode 1 y\nnode 2 z\nroot 0\nprior 0 0.5 0.5\n\
         edge 0 1 1 0 1 0\nedge 0 2 0.5 0.5 0.5 0.5\nevidence 1 0 1\n",
    )
    .unwrap();
    assert_eq!(run(&["check", zero.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn contract_dump_of_the_four_chain() {
    let o = run(&["contract-dump", data("chain4.btn").to_str().unwrap()]);
    assert!(o.status.success());
    let expected = "T0 = {x1, e1, x2, e2, x3, e3, x4, e4, e5}\n\
                    T1 = {x1, e1, x3, e3, e5}\n\
                    T2 = {x1, e1, e5}\n\
                    1 B1(x1) <- B0(x1) A0(x2) lambda(e2) B0(x2)\n\
                    1 B1(x3) <- B0(x3) A0(x4) lambda(e4) B0(x4)\n\
                    2 B2(x1) <- B1(x1) A1(x3) lambda(e3) B1(x3)\n";
    assert_eq!(stdout(&o), expected);
}

#[test]
fn session_answers_the_same_under_every_engine() {
    let script = "query 2\nupdate 7 0.1 0.9\nquery 2\nupdate 4 1 0\nquery 0\nquery 3\nquery 99\nstats\nquit\nquery 0\n";
    let outs: Vec<Vec<String>> = ["hierarchy", "path", "full"]
        .iter()
        .map(|e| {
            let o = run_with_input(&["session", data("chain4.btn").to_str().unwrap(), "--engine", e], script);
            assert!(o.status.success());
            stdout(&o).lines().map(str::to_string).collect()
        })
        .collect();
    for out in &outs {
        assert_eq!(out.len(), 8, "{out:?}");
        assert_eq!(out[1], "ok");
        assert!(out[6].starts_with("err "));
        assert!(out[7].starts_with("stats mv="));
    }
    for other in &outs[1..] {
        for i in [0, 2, 4, 5] {
            let (a, b) = (parse_belief(&outs[0][i]).unwrap(), parse_belief(&other[i]).unwrap());
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12));
        }
    }
}

#[test]
fn polytree_session_uses_file_ids() {
    let o = run_with_input(
        &["polytree", "session", data("sprinkler.ptn").to_str().unwrap()],
        "query 2\nupdate 2 0 1\nquery 0\n",
    );
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    let b = parse_belief(&lines[2]).unwrap();
    assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn bench_with_zero_ops_prints_only_the_header() {
    let o = run(&["bench", "--sizes", "16,32", "--ops", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), format!("{}\n", logbayes::bench::CSV_HEADER));
    assert_eq!(run(&["bench", "--sizes", "64,16"]).status.code(), Some(1));
}

#[test]
fn bench_rows_are_well_formed() {
    let o = run(&["bench", "--shape", "random", "--sizes", "33", "--ops", "5", "--engines", "hierarchy,full"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 9));
}

#[test]
fn protein_train_predict_mutate() {
    let tables = scratch("tables.json");
    let o = run(&["protein", "train", data("corpus.txt").to_str().unwrap(), "--w", "2", "-o", tables.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = tables.to_str().unwrap();

    let seq = "MKTAYIAKQRQISFVKSHFSRQLEERLGLIEVQ";
    let o = run(&["protein", "predict", t, seq]);
    assert!(o.status.success());
    let pred = stdout(&o).trim().to_string();
    assert_eq!(pred.len(), seq.len());
    assert!(pred.bytes().all(|c| b"hec".contains(&c)));

    let o = run(&["protein", "mutate", t, seq, "--site", "10", "--residue", "P", "--watch", "8,9,10", "--engine", "path"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("site,watch_site,bel_before_hh,"));
    assert!(lines[0].ends_with(",argmax_changed"));
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("10,8,"));

    let o = run(&["protein", "mutate", t, seq, "--site", "10", "--residue", "B", "--watch", "3"]);
    assert_eq!(o.status.code(), Some(2));
}
