//! Exit codes and files of the command-line driver.

use std::fs;
use std::path::Path;

use ftrevise::casestudies::{generate, CaseParams};
use ftrevise::synthesis::{synthesize, SynthesisOptions};
use ftrevise::verify::ResultDump;
use ftrevise_cli::{run, EXIT_FAILED, EXIT_OK, EXIT_USAGE, STATS_SCHEMA};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["ftrevise"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TOGGLE: &str = "\
system toggle
var x : {0,1}
process p
  read x
  write x
  action a: x = 0 -> x := 1
  action b: x = 1 -> x := 0
invariant true
badtrans false
";

// the fault jumps straight into a bad transition nobody can avoid
const DOOMED: &str = "\
system doomed
var x : {0,1,2}
process p
  read x
  write x
  action a: x = 0 -> x := 0
fault f: x = 0 -> x := 1
invariant x = 0
badtrans x = 1 & x' = 2 | x = 0 & x' = 1
";

#[test]
fn synth_writes_summary_stats_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let dump = dir.path().join("dump.json");
    let (code, out, err) = cli(&["synth", "--case", "token:4", "--stats", p(&stats), "--out", p(&dump)]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("system token4\n"), "{out}");
    assert!(out.contains("invariant: 8 states"), "{out}");
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(s["schema"], STATS_SCHEMA);
    assert_eq!(s["invariant_states"], "8");
    assert!(s["stats"]["iterations"].as_u64().unwrap() >= 1);
    let (code, out, _) = cli(&["verify", "--case", "token:4", "--result", p(&dump)]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("C3: pass"));
    // the dump belongs to a different system
    let (code, _, _) = cli(&["verify", "--case", "token:5", "--result", p(&dump)]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn synth_from_file_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("toggle.ftd");
    fs::write(&file, TOGGLE).unwrap();
    let (code, out, err) = cli(&["synth", "--input", p(&file), "--dump"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.contains("removed: 0 groups"));
    assert!(out.contains("transitions:\n"), "{out}");
    assert_eq!(out.lines().filter(|l| l.contains(" -> ")).count(), 2, "{out}");
}

#[test]
fn usage_and_input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ftd");
    assert_eq!(cli(&["synth", "--input", p(&missing)]).0, EXIT_USAGE);
    assert_eq!(cli(&["synth"]).0, EXIT_USAGE);
    assert_eq!(cli(&["synth", "--case", "byz:3", "--input", p(&missing)]).0, EXIT_USAGE);
    assert_eq!(cli(&["synth", "--case", "byz:3", "--mode", "fast"]).0, EXIT_USAGE);
    assert_eq!(cli(&["synth", "--case", "ring:3"]).0, EXIT_USAGE);
    let (code, _, err) = cli(&["synth", "--case", "byz:3", "--workers", "4", "--mode", "par-group"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("must not exceed the process count"), "{err}");
    let bad = dir.path().join("bad.ftd");
    fs::write(&bad, TOGGLE.replace("write x", "write y")).unwrap();
    let (code, _, err) = cli(&["synth", "--input", p(&bad)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("bad.ftd:3:1: process p: [undeclared variable]"), "{err}");
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
    assert_eq!(cli(&["--version"]).0, EXIT_OK);
}

#[test]
fn synthesis_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("doomed.ftd");
    fs::write(&file, DOOMED).unwrap();
    let (code, _, err) = cli(&["synth", "--input", p(&file)]);
    assert_eq!(code, EXIT_FAILED, "{err}");
}

#[test]
fn tampered_dump_fails_verification() {
    let spec = generate("token:4".parse::<CaseParams>().unwrap()).unwrap();
    let (enc, mut result) = synthesize(&spec, &SynthesisOptions::default()).unwrap();
    // no program moves at all: corrupted states outside the invariant are stuck
    result.p_prime = enc.empty_transitions();
    let dump = ResultDump::new(&spec, &enc, &result).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("dump.json");
    fs::write(&file, serde_json::to_string(&dump).unwrap()).unwrap();
    let (code, out, err) = cli(&["verify", "--case", "token:4", "--result", p(&file)]);
    assert_eq!(code, EXIT_FAILED, "{out}");
    assert!(out.contains("FAIL"), "{out}");
    assert!(!err.trim().is_empty());
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let (code, out, err) = cli(&[
        "bench", "--case", "byz", "--sizes", "3,4", "--workers", "1,2", "--repeat", "2", "--csv", p(&csv),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("family"));
    let mut r = csv::Reader::from_path(&csv).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        headers,
        ["family", "n", "workers", "group_time", "deadlock_resolution_time", "total_time", "speedup_vs_1worker"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[0][0], "byz");
    assert_eq!(&rows[0][6], "1.0");
    assert!(rows.iter().all(|row| row[5].parse::<f64>().unwrap() > 0.0));
}
