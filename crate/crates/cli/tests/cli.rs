use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corrupt-max")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn gen_cyclic_reports_max() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.txt");
    let o = cli(&["gen", "cyclic", "--n", "5", "--k", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "max=0");
    assert!(fs::read_to_string(&path).unwrap().starts_with("5 2\n"));
}

#[test]
fn gen_rejects_large_k() {
    let o = cli(&["gen", "random", "--n", "4", "--k", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["gen", "nonsense", "--n", "4", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_is_byte_identical() {
    let a = cli(&["gen", "random", "--n", "40", "--k", "5", "--seed", "9"]);
    let b = cli(&["gen", "random", "--n", "40", "--k", "5", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let c = cli(&["gen", "random", "--n", "40", "--k", "5", "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn run_det_uses_closed_form() {
    let o = cli(&["run", "--algorithm", "det", "--n", "10", "--k", "2", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["queries"], 35);
    assert_eq!(v["contains_max"], true);
    assert_eq!(v["output"].as_array().unwrap().len(), 5);
}

#[test]
fn run_par_small_k_is_config_error() {
    let o = cli(&["run", "--algorithm", "par", "--n", "100", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["run", "--algorithm", "det", "--n", "5", "--k", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_rank_on_cyclic_keeps_everything() {
    let o = cli(&["run", "--algorithm", "rank", "--n", "5", "--k", "2", "--family", "cyclic"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["output"], serde_json::json!([0, 1, 2, 3, 4]));
    assert_eq!(v["queries"], 10);
}

#[test]
fn run_budget_exhaustion_exits_3() {
    let o = cli(&["run", "--algorithm", "det", "--n", "50", "--k", "3", "--budget", "10"]);
    assert_eq!(o.status.code(), Some(3));
    let v = json(&o);
    assert_eq!(v["budget_exhausted"], true);
    assert_eq!(v["queries"], 10);
}

#[test]
fn run_from_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.txt");
    let p = path.to_str().unwrap();
    assert_eq!(cli(&["gen", "shuffled-cyclic", "--n", "30", "--k", "3", "--seed", "4", "--out", p]).status.code(), Some(0));
    let o = cli(&["run", "--algorithm", "det", "--instance", p]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["queries"], 26 * 7);
    let o = cli(&["run", "--algorithm", "det", "--instance", p, "--k", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cli(&["run", "--algorithm", "det", "--instance", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn subset_can_miss_the_maximum() {
    // a random subset of 3 out of 64 misses most of the time
    let misses = (0..10u64)
        .filter(|s| {
            let o = cli(&["run", "--algorithm", "subset", "--n", "64", "--k", "1", "--seed", &s.to_string()]);
            o.status.code() == Some(1)
        })
        .count();
    assert!(misses > 0);
}

#[test]
fn bench_det_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let js = dir.path().join("a.json");
    let args = ["bench", "--n", "20,40", "--k", "1,2", "--algorithm", "det", "--trials", "25", "--master-seed", "5"];
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--csv", csv.to_str().unwrap(), "--json", js.to_str().unwrap()]);
    assert_eq!(cli(&full).status.code(), Some(0));

    let text = fs::read_to_string(&csv).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["n", "k", "c", "algorithm", "trials", "successes", "rate", "wilson_low", "wilson_high", "mean_queries", "max_queries", "master_seed", "status"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(&row[6], "1.0");
        assert_eq!(&row[12], "ok");
    }
    let doc: Value = serde_json::from_str(&fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);

    // same master seed, same bytes
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a), text);
}

#[test]
fn bench_flags_invalid_cells() {
    let o = cli(&["bench", "--n", "4,30", "--k", "2", "--algorithm", "det,par", "--c", "0.3,0.5", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().skip(1).collect();
    // n=4: det, par 0.3, par 0.5 are all invalid; n=30 runs
    assert_eq!(lines.len(), 6);
    assert!(lines[..3].iter().all(|l| l.contains("skipped:")));
    assert!(lines[3..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn bench_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(&cfg, "# sweep\nn = 24\nk = 2\nalgorithm = det\ntrials = 3\nmaster_seed = 1\n").unwrap();
    let o = cli(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = cli(&["bench", "--config", cfg.to_str().unwrap(), "--n", "24,30"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn verify_formulas_and_symmetry_pass() {
    let o = cli(&["verify", "formulas", "--n-max", "24", "--k-max", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cli(&["verify", "symmetry", "--k-max", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lb_det_under_budget_finds_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["verify", "lb-det", "--n", "12", "--k", "2", "--algorithm", "rank", "--budget", "20", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("COUNTEREXAMPLE"));
    for f in ["first.txt", "second.txt", "transcript.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let transcript = fs::read_to_string(dir.path().join("transcript.txt")).unwrap();
    assert_eq!(transcript.lines().count(), 21);
}

#[test]
fn lb_det_det_at_full_budget_has_no_witness() {
    // (n-(k+1))(2k+1) = 45 >= (n-(2k+1))(k+1) = 21
    let o = cli(&["verify", "lb-det", "--n", "12", "--k", "2", "--algorithm", "det", "--budget", "45"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("NO-WITNESS"));
}
