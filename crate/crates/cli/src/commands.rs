use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use corrupt_max::adversary::{lower_bound, run_against_adversary, CounterexampleOutcome};
use corrupt_max::algorithms::{det_max_find, det_query_count, Algorithm};
use corrupt_max::harness::{assert_query_formula, bench_cell, run_trial, BenchRow, InstanceFamily, PolicyKind};
use corrupt_max::instance::{gen_cyclic, InstanceSpec};
use corrupt_max::model::{with_counting, ElementId, QueryBudget};
use corrupt_max::seeds::substream;

use crate::config::Config;
use crate::{BenchArgs, CliError, Command, FormulasArgs, GenArgs, LbDetArgs, RunArgs, SymmetryArgs, VerifyCommand};

pub fn dispatch(cmd: Command, cfg: &Config) -> Result<u8, CliError> {
    match cmd {
        Command::Gen(a) => cmd_gen(a, cfg),
        Command::Run(a) => cmd_run(a, cfg),
        Command::Bench(a) => cmd_bench(a, cfg),
        Command::Verify(VerifyCommand::LbDet(a)) => cmd_lb_det(a, cfg),
        Command::Verify(VerifyCommand::Formulas(a)) => cmd_formulas(a, cfg),
        Command::Verify(VerifyCommand::Symmetry(a)) => cmd_symmetry(a, cfg),
    }
}

fn family(name: &str, policy: Option<String>) -> Result<InstanceFamily, CliError> {
    let fam: InstanceFamily = name.parse().map_err(CliError::config)?;
    match (fam, policy) {
        (InstanceFamily::Random(_), Some(p)) => Ok(InstanceFamily::Random(p.parse::<PolicyKind>().map_err(CliError::config)?)),
        (InstanceFamily::Random(_), None) => Ok(fam),
        (_, Some(_)) => Err(CliError::config(format!("--policy only applies to the random family, not {name}"))),
        (_, None) => Ok(fam),
    }
}

fn algorithm(tag: &str, c: f64) -> Result<Algorithm, CliError> {
    Algorithm::from_tag(tag, c).ok_or_else(|| CliError::config(format!("unknown algorithm {tag:?} (expected rank|det|par|subset)")))
}

fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {path}: {e}")))
}

/// Pretty JSON with keys sorted, newline-terminated.
fn stable_json(v: &impl serde::Serialize) -> String {
    let value: Value = serde_json::to_value(v).expect("serializable");
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_gen(a: GenArgs, cfg: &Config) -> Result<u8, CliError> {
    let fam = family(&a.family, cfg.pick(a.policy, "policy")?)?;
    let n = cfg.require(a.n, "n")?;
    let k = match fam {
        InstanceFamily::Ascending => cfg.pick(a.k, "k")?.unwrap_or(0),
        _ => cfg.require(a.k, "k")?,
    };
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let spec = fam.generate(n, k, seed).map_err(|e| CliError::config(e.to_string()))?;
    let text = spec.to_text();
    match cfg.pick(a.out, "out")? {
        Some(path) => {
            write_file(&path, &text)?;
            println!("max={}", spec.maximum());
        }
        None => {
            print!("{text}");
            eprintln!("max={}", spec.maximum());
        }
    }
    Ok(0)
}

fn load_instance(path: &str) -> Result<InstanceSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {path}: {e}")))?;
    InstanceSpec::from_text(&text).map_err(|e| CliError::config(format!("{path}: {e}")))
}

fn cmd_run(a: RunArgs, cfg: &Config) -> Result<u8, CliError> {
    let tag: String = cfg.require(a.algorithm, "algorithm")?;
    let c = cfg.pick(a.c, "c")?.unwrap_or(0.5);
    let alg = algorithm(&tag, c)?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let budget = QueryBudget::from(cfg.pick(a.budget, "budget")?);
    let spec = match cfg.pick(a.instance, "instance")? {
        Some(path) => {
            let spec = load_instance(&path)?;
            for (key, flag, actual) in [("n", a.n, spec.n()), ("k", a.k, spec.k())] {
                if let Some(v) = cfg.pick(flag, key)? {
                    if v != actual {
                        return Err(CliError::config(format!("--{key} {v} disagrees with instance file ({actual})")));
                    }
                }
            }
            spec
        }
        None => {
            let n = cfg.require(a.n, "n")?;
            let k = cfg.require(a.k, "k")?;
            alg.check(n, k).map_err(|e| CliError::config(e.to_string()))?;
            let name = cfg.pick(a.family, "family")?.unwrap_or_else(|| "random".to_string());
            let fam = family(&name, cfg.pick(a.policy, "policy")?)?;
            fam.generate(n, k, seed).map_err(|e| CliError::config(e.to_string()))?
        }
    };
    alg.check(spec.n(), spec.k()).map_err(|e| CliError::config(e.to_string()))?;
    let r = run_trial(alg, &spec, substream(seed, 1), budget).map_err(|e| CliError::config(e.to_string()))?;
    let out = json!({
        "algorithm": alg.tag(),
        "budget_exhausted": r.budget_exhausted,
        "contains_max": r.contains_max,
        "k": spec.k(),
        "n": spec.n(),
        "output": r.output.iter().map(|e| e.0).collect::<Vec<_>>(),
        "queries": r.queries,
        "seed": seed,
    });
    let text = stable_json(&out);
    print!("{text}");
    if let Some(path) = cfg.pick(a.json, "json")? {
        write_file(&path, &text)?;
    }
    Ok(if r.budget_exhausted {
        3
    } else if r.contains_max {
        0
    } else {
        1
    })
}

fn csv_text(rows: &[BenchRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cmd_bench(a: BenchArgs, cfg: &Config) -> Result<u8, CliError> {
    let ns: Vec<usize> = cfg.list(a.n, "n")?.ok_or_else(|| CliError::config("missing required --n"))?;
    let ks: Vec<usize> = cfg.list(a.k, "k")?.ok_or_else(|| CliError::config("missing required --k"))?;
    let cs: Vec<f64> = cfg.list(a.c, "c")?.unwrap_or_else(|| vec![0.5]);
    let tags: Vec<String> = cfg.list(a.algorithm, "algorithm")?.ok_or_else(|| CliError::config("missing required --algorithm"))?;
    if ns.is_empty() || ks.is_empty() || cs.is_empty() || tags.is_empty() {
        return Err(CliError::config("sweep lists must be non-empty"));
    }
    let name = cfg.pick(a.family, "family")?.unwrap_or_else(|| "random".to_string());
    let fam = family(&name, cfg.pick(a.policy, "policy")?)?;
    let trials = cfg.pick(a.trials, "trials")?.unwrap_or(100);
    let master_seed = cfg.pick(a.master_seed, "master-seed")?.unwrap_or(0);
    for t in &tags {
        algorithm(t, 0.5)?;
    }

    let mut rows = Vec::new();
    for &n in &ns {
        for &k in &ks {
            for tag in &tags {
                let cells: Vec<Algorithm> = if tag == "par" {
                    cs.iter().map(|&c| Algorithm::PruneAndRank { c }).collect()
                } else {
                    vec![algorithm(tag, 0.5)?]
                };
                for alg in cells {
                    let row = bench_cell(alg, fam, n, k, trials, master_seed).map_err(|e| CliError::config(e.to_string()))?;
                    if row.status != "ok" {
                        eprintln!("skipped n={n} k={k} algorithm={alg}: {}", row.status);
                    }
                    rows.push(row);
                }
            }
        }
    }

    let csv = csv_text(&rows)?;
    let doc = json!({ "family": fam.name(), "rows": rows });
    let (csv_path, json_path) = (cfg.pick(a.csv, "csv")?, cfg.pick(a.json, "json")?);
    if csv_path.is_none() && json_path.is_none() {
        print!("{csv}");
    }
    if let Some(p) = csv_path {
        write_file(&p, &csv)?;
    }
    if let Some(p) = json_path {
        write_file(&p, &stable_json(&doc))?;
    }
    Ok(0)
}

fn cmd_lb_det(a: LbDetArgs, cfg: &Config) -> Result<u8, CliError> {
    let n: usize = cfg.require(a.n, "n")?;
    let k: usize = cfg.require(a.k, "k")?;
    let tag: String = cfg.require(a.algorithm, "algorithm")?;
    let alg = algorithm(&tag, cfg.pick(a.c, "c")?.unwrap_or(0.5))?;
    let budget: u64 = cfg.require(a.budget, "budget")?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    alg.check(n, k).map_err(|e| CliError::config(e.to_string()))?;
    if n < 2 * k + 2 {
        return Err(CliError::config(format!("lb-det needs n >= 2k+2, got n = {n}, k = {k}")));
    }
    // past the precondition checks, any error is a failed construction
    let run = run_against_adversary(alg, n, k, budget, seed).map_err(|e| CliError { code: 1, msg: e.to_string() })?;
    let bound = lower_bound(n, k);
    let repro = format!("corrupt-max verify lb-det --n {n} --k {k} --algorithm {tag} --budget {budget} --seed {seed}");
    match &run.outcome {
        CounterexampleOutcome::NoWitness => {
            println!("NO-WITNESS");
            println!("answered={} bound={bound}", run.answered);
            if run.answered < bound {
                eprintln!("assertion failed: no counterexample below the bound; reproduce with:\n  {repro}");
                return Ok(1);
            }
        }
        CounterexampleOutcome::Found(cx) => {
            let ids = |v: &[ElementId]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
            println!("COUNTEREXAMPLE");
            println!("answered={} bound={bound} truncated={}", run.answered, run.truncated);
            println!("output={}", ids(&run.output.to_vec()));
            println!("witness={}", cx.witness);
            println!("beaters={}", ids(&cx.beaters));
            println!("corrupted={}", ids(&cx.corrupted));
            let files = [
                ("first.txt", cx.first_instance.to_text()),
                ("second.txt", cx.second_instance.to_text()),
                ("transcript.txt", cx.transcript.to_text()),
            ];
            match cfg.pick(a.out, "out")? {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {dir}: {e}")))?;
                    for (name, text) in &files {
                        let p = Path::new(&dir).join(name);
                        write_file(&p.to_string_lossy(), text)?;
                        println!("wrote {}", p.display());
                    }
                }
                None => {
                    for (name, text) in &files {
                        println!("--- {name}");
                        print!("{text}");
                    }
                }
            }
        }
    }
    Ok(0)
}

fn cmd_formulas(a: FormulasArgs, cfg: &Config) -> Result<u8, CliError> {
    let n_max: usize = cfg.pick(a.n_max, "n-max")?.unwrap_or(60);
    let k_max: usize = cfg.pick(a.k_max, "k-max")?.unwrap_or(8);
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(0);
    let mut checked = 0u64;
    let families = [InstanceFamily::Random(PolicyKind::Seeded), InstanceFamily::Random(PolicyKind::AllWin), InstanceFamily::Ascending];
    for k in 1..=k_max {
        for n in 2 * k + 2..=n_max {
            for fam in families {
                let spec = fam.generate(n, k, seed).map_err(|e| CliError::config(e.to_string()))?;
                let mut o = with_counting(spec.oracle());
                det_max_find(&mut o, n, k).map_err(|e| CliError::config(e.to_string()))?;
                checked += 1;
                let ok = assert_query_formula("det", n, k, o.count()).map_err(|e| CliError::config(e.to_string()))?;
                if !ok {
                    eprintln!(
                        "det_max_find used {} queries at n={n} k={k}, expected {}; reproduce with:\n  corrupt-max run --algorithm det --n {n} --k {k} --family {} --seed {seed}",
                        o.count(),
                        det_query_count(n, k),
                        fam.name()
                    );
                    return Ok(1);
                }
            }
        }
    }
    println!("formulas ok: {checked} runs, k <= {k_max}, n <= {n_max}");
    Ok(0)
}

fn cmd_symmetry(a: SymmetryArgs, cfg: &Config) -> Result<u8, CliError> {
    let k_max: usize = cfg.pick(a.k_max, "k-max")?.unwrap_or(32);
    for k in 1..=k_max {
        let n = 2 * k + 1;
        let spec = gen_cyclic(n, k).map_err(|e| CliError::config(e.to_string()))?;
        let mut wins: BTreeMap<usize, usize> = BTreeMap::new();
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let w = spec.winner(x.into(), y.into());
                if x < y {
                    *wins.entry(w.index()).or_default() += 1;
                }
                let rotated = spec.winner(((x + 1) % n).into(), ((y + 1) % n).into());
                if rotated.index() != (w.index() + 1) % n {
                    eprintln!("rotation is not an automorphism at k={k}, pair ({x}, {y}); reproduce with:\n  corrupt-max gen cyclic --n {n} --k {k}");
                    return Ok(1);
                }
            }
        }
        if (0..n).any(|i| wins.get(&i).copied().unwrap_or(0) != k) {
            eprintln!("out-degree differs from k={k}; reproduce with:\n  corrupt-max gen cyclic --n {n} --k {k}");
            return Ok(1);
        }
    }
    println!("symmetry ok: k = 1..={k_max}");
    Ok(0)
}
