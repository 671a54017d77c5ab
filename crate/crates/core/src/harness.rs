//! Trials, containment checks against ground truth, and success-rate
//! estimation with Wilson intervals.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algorithms::{det_query_count, Algorithm, AlgorithmError, CandidateSet};
use crate::instance::{gen_ascending, gen_cyclic, gen_random, gen_shuffled_cyclic, CorruptedPolicy, InstanceError, InstanceSpec};
use crate::model::{Counting, OracleError, QueryBudget, Recorder, Transcript};
use crate::seeds::{substream, trial_seed};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// True iff the instance's uncorrupted maximum is in `s`.
pub fn contains_maximum(spec: &InstanceSpec, s: &CandidateSet) -> bool {
    s.contains(spec.maximum())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialResult {
    pub contains_max: bool,
    pub queries: u64,
    pub output: CandidateSet,
    pub seed: u64,
    pub budget_exhausted: bool,
    pub transcript: Transcript,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] AlgorithmError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("unsupported algorithm tag {0:?} for a query-count formula")]
    UnsupportedTag(String),
}

/// Runs one algorithm on one instance behind budget and counting layers.
///
/// Budget exhaustion is a recorded failure, not an error. Precondition
/// violations are returned as configuration errors before any query.
pub fn run_trial(algorithm: Algorithm, spec: &InstanceSpec, seed: u64, budget: QueryBudget) -> Result<TrialResult, HarnessError> {
    let (n, k) = (spec.n(), spec.k());
    algorithm.check(n, k)?;
    let mut oracle = Recorder::new(Counting::new(spec.oracle()), k, budget);
    let result = algorithm.run(&mut oracle, n, k, seed);
    let queries = oracle.inner().count();
    let (_, transcript) = oracle.into_parts();
    match result {
        Ok(output) => Ok(TrialResult {
            contains_max: contains_maximum(spec, &output),
            queries,
            output,
            seed,
            budget_exhausted: false,
            transcript,
        }),
        Err(AlgorithmError::Oracle(OracleError::BudgetExhausted { .. })) => Ok(TrialResult {
            contains_max: false,
            queries,
            output: CandidateSet::new(),
            seed,
            budget_exhausted: true,
            transcript,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = ((centre - half) / denom).clamp(0.0, 1.0);
    let high = ((centre + half) / denom).clamp(0.0, 1.0);
    // guard against rounding at p = 0 or 1
    (low.min(p), high.max(p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessStats {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
}

impl SuccessStats {
    pub fn from_trials<'a>(results: impl IntoIterator<Item = &'a TrialResult>) -> Self {
        let (mut trials, mut successes, mut total, mut max) = (0u64, 0u64, 0u64, 0u64);
        for r in results {
            trials += 1;
            successes += u64::from(r.contains_max);
            total += r.queries;
            max = max.max(r.queries);
        }
        Self::from_counts(trials, successes, total, max)
    }

    pub fn from_counts(trials: u64, successes: u64, total_queries: u64, max_queries: u64) -> Self {
        let (wilson_low, wilson_high) = wilson_interval(successes, trials, Z_95);
        let t = trials.max(1) as f64;
        SuccessStats {
            trials,
            successes,
            rate: successes as f64 / t,
            wilson_low,
            wilson_high,
            mean_queries: total_queries as f64 / t,
            max_queries,
        }
    }
}

/// Corrupted-edge policy for the random family; `Seeded` draws its coin
/// seed from the trial seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    AllWin,
    AllLose,
    Seeded,
}

impl PolicyKind {
    pub fn policy(self, seed: u64) -> CorruptedPolicy {
        match self {
            PolicyKind::AllWin => CorruptedPolicy::AllWin,
            PolicyKind::AllLose => CorruptedPolicy::AllLose,
            PolicyKind::Seeded => CorruptedPolicy::SeededRandom(seed),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allwin" => Ok(PolicyKind::AllWin),
            "alllose" => Ok(PolicyKind::AllLose),
            "seeded" => Ok(PolicyKind::Seeded),
            _ => Err(format!("unknown policy {s:?} (expected allwin|alllose|seeded)")),
        }
    }
}

/// Instance family for experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceFamily {
    Random(PolicyKind),
    Cyclic,
    ShuffledCyclic,
    Ascending,
}

impl InstanceFamily {
    pub fn generate(self, n: usize, k: usize, seed: u64) -> Result<InstanceSpec, InstanceError> {
        match self {
            InstanceFamily::Random(p) => gen_random(n, k, p.policy(substream(seed, 2)), seed),
            InstanceFamily::Cyclic => gen_cyclic(n, k),
            InstanceFamily::ShuffledCyclic => gen_shuffled_cyclic(n, k, seed),
            InstanceFamily::Ascending => gen_ascending(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InstanceFamily::Random(_) => "random",
            InstanceFamily::Cyclic => "cyclic",
            InstanceFamily::ShuffledCyclic => "shuffled-cyclic",
            InstanceFamily::Ascending => "ascending",
        }
    }
}

impl fmt::Display for InstanceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(InstanceFamily::Random(PolicyKind::Seeded)),
            "cyclic" => Ok(InstanceFamily::Cyclic),
            "shuffled-cyclic" => Ok(InstanceFamily::ShuffledCyclic),
            "ascending" => Ok(InstanceFamily::Ascending),
            _ => Err(format!("unknown family {s:?} (expected random|cyclic|ascending|shuffled-cyclic)")),
        }
    }
}

/// Seeds for trial `index`: `(instance seed, algorithm seed)`, both derived
/// from [`trial_seed`] via [`substream`] streams 0 and 1.
pub fn trial_seeds(master_seed: u64, index: u64) -> (u64, u64) {
    let s = trial_seed(master_seed, index);
    (substream(s, 0), substream(s, 1))
}

/// One independent trial of an experiment; the building block of
/// [`estimate_success`].
pub fn experiment_trial(algorithm: Algorithm, family: InstanceFamily, n: usize, k: usize, master_seed: u64, index: u64) -> Result<TrialResult, HarnessError> {
    let (inst_seed, alg_seed) = trial_seeds(master_seed, index);
    let spec = family.generate(n, k, inst_seed)?;
    let mut r = run_trial(algorithm, &spec, alg_seed, QueryBudget::Unlimited)?;
    r.transcript = Transcript::default();
    Ok(r)
}

/// Runs `trials` independent trials in parallel and aggregates them.
/// Reproducible bit for bit for equal inputs.
pub fn estimate_success(algorithm: Algorithm, family: InstanceFamily, n: usize, k: usize, trials: u64, master_seed: u64) -> Result<SuccessStats, HarnessError> {
    algorithm.check(n, k)?;
    family.generate(n, k, 0)?;
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| experiment_trial(algorithm, family, n, k, master_seed, i))
        .collect::<Result<_, _>>()?;
    Ok(SuccessStats::from_trials(&results))
}

/// One row of a benchmark sweep. Column order is the CSV column order.
/// Statistics are empty when the cell was skipped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub c: Option<f64>,
    pub algorithm: String,
    pub trials: u64,
    pub successes: Option<u64>,
    pub rate: Option<f64>,
    pub wilson_low: Option<f64>,
    pub wilson_high: Option<f64>,
    pub mean_queries: Option<f64>,
    pub max_queries: Option<u64>,
    pub master_seed: u64,
    /// `ok`, or `skipped:<reason>`.
    pub status: String,
}

/// Runs one sweep cell; precondition failures become a skipped row.
pub fn bench_cell(algorithm: Algorithm, family: InstanceFamily, n: usize, k: usize, trials: u64, master_seed: u64) -> Result<BenchRow, HarnessError> {
    let mut row = BenchRow {
        n,
        k,
        c: algorithm.c(),
        algorithm: algorithm.tag().to_string(),
        trials,
        successes: None,
        rate: None,
        wilson_low: None,
        wilson_high: None,
        mean_queries: None,
        max_queries: None,
        master_seed,
        status: "ok".into(),
    };
    match estimate_success(algorithm, family, n, k, trials, master_seed) {
        Ok(st) => {
            row.successes = Some(st.successes);
            row.rate = Some(st.rate);
            row.wilson_low = Some(st.wilson_low);
            row.wilson_high = Some(st.wilson_high);
            row.mean_queries = Some(st.mean_queries);
            row.max_queries = Some(st.max_queries);
        }
        Err(HarnessError::Config(AlgorithmError::Precondition(_))) => row.status = "skipped:precondition".into(),
        Err(HarnessError::Instance(InstanceError::Param(_))) => row.status = "skipped:parameters".into(),
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// Checks an observed query count against the closed form for `tag`.
/// Only `det` has an exact formula.
pub fn assert_query_formula(tag: &str, n: usize, k: usize, observed: u64) -> Result<bool, HarnessError> {
    match tag {
        "det" if n >= 2 * k + 2 => Ok(observed == det_query_count(n, k)),
        "det" => Err(AlgorithmError::Precondition(format!("n = {n} < 2k+2 for k = {k}")).into()),
        other => Err(HarnessError::UnsupportedTag(other.to_string())),
    }
}
