//! Executable form of the deterministic query lower bound.
//!
//! The [`Adversary`] answers every query as if the larger id wins. When an
//! algorithm stops having answered fewer than `(n-(2k+1))(k+1)` queries, some
//! element outside its output was beaten by at most `k` distinct others.
//! [`construct_counterexample`] declares those beaters corrupted (padding the
//! set to `k`) and rewires the witness to lose exactly to its beaters, so it
//! becomes the uncorrupted maximum of a second instance that answers every
//! recorded query identically.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::algorithms::{output_size, Algorithm, AlgorithmError, CandidateSet};
use crate::instance::{ground_truth, CorruptedPolicy, InstanceSpec};
use crate::model::{check_pair, CompareOutcome, ComparisonOracle, ElementId, OracleError, QueryBudget, Recorder, Transcript};

/// Adaptive adversary state.
#[derive(Clone, Debug)]
pub struct Adversary {
    n: usize,
    k: usize,
    smaller_count: Vec<u64>,
    beaten_by: Vec<BTreeSet<ElementId>>,
    transcript: Transcript,
}

impl Adversary {
    pub fn new(n: usize, k: usize) -> Self {
        Adversary {
            n,
            k,
            smaller_count: vec![0; n],
            beaten_by: vec![BTreeSet::new(); n],
            transcript: Transcript::new(n, k),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Times `e` was answered as the loser, repeats included.
    pub fn smaller_count(&self, e: ElementId) -> u64 {
        self.smaller_count[e.index()]
    }

    /// Distinct elements reported to beat `e`.
    pub fn beaten_by(&self, e: ElementId) -> &BTreeSet<ElementId> {
        &self.beaten_by[e.index()]
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn answered(&self) -> u64 {
        self.transcript.len() as u64
    }

    /// Answers `{a, b}` from the ascending instance and records it.
    pub fn answer(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        check_pair(self.n, a, b)?;
        let out = CompareOutcome::of_pair(a, b, a.max(b));
        self.smaller_count[out.loser.index()] += 1;
        self.beaten_by[out.loser.index()].insert(out.winner);
        self.transcript.push(a, b, out);
        Ok(out)
    }
}

impl ComparisonOracle for Adversary {
    fn n(&self) -> usize {
        self.n
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        self.answer(a, b)
    }
}

/// Query count below which every deterministic algorithm can be defeated:
/// `(n-(2k+1))(k+1)`, or 0 when `n <= 2k+1`.
pub fn lower_bound(n: usize, k: usize) -> u64 {
    (n.saturating_sub(2 * k + 1) * (k + 1)) as u64
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub witness: ElementId,
    /// Distinct elements that beat the witness in the transcript.
    pub beaters: Vec<ElementId>,
    /// Beaters plus padding, ascending by id, size `k`.
    pub corrupted: Vec<ElementId>,
    /// The ascending graph with `corrupted` fixed.
    pub first_instance: InstanceSpec,
    /// Same graph with the witness's edges rewired; its maximum is the
    /// witness.
    pub second_instance: InstanceSpec,
    pub transcript: Transcript,
}

#[derive(Clone, Debug)]
pub enum CounterexampleOutcome {
    Found(Box<Counterexample>),
    NoWitness,
}

impl CounterexampleOutcome {
    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            CounterexampleOutcome::Found(c) => Some(c),
            CounterexampleOutcome::NoWitness => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("output set has {got} elements, expected {want}")]
    OutputSize { got: usize, want: usize },
    /// A constructed counterexample failed its own checks. Always a bug.
    #[error("counterexample validation failed: {0}")]
    Validation(String),
}

/// Ascending graph with the given corrupted set; corrupted-incident edges
/// are materialized explicitly. With `rewired = Some((w, beaters))`, `w`
/// loses exactly to `beaters` and beats everyone else.
fn ascending_with(n: usize, corrupted: &[ElementId], rewired: Option<(ElementId, &[ElementId])>) -> InstanceSpec {
    let is_corrupt: Vec<bool> = {
        let mut v = vec![false; n];
        corrupted.iter().for_each(|c| v[c.index()] = true);
        v
    };
    let mut uncorrupted: Vec<ElementId> = (0..n).rev().map(ElementId::from).filter(|e| !is_corrupt[e.index()]).collect();
    if let Some((w, _)) = rewired {
        uncorrupted.retain(|&e| e != w);
        uncorrupted.insert(0, w);
    }
    let mut m = HashMap::new();
    for &c in corrupted {
        for o in (0..n).map(ElementId::from) {
            if o == c {
                continue;
            }
            let key = if c < o { (c.0, o.0) } else { (o.0, c.0) };
            let winner = match rewired {
                Some((w, beaters)) if o == w => {
                    if beaters.contains(&c) {
                        c
                    } else {
                        w
                    }
                }
                _ => c.max(o),
            };
            m.insert(key, winner);
        }
    }
    InstanceSpec::new(n, corrupted.len(), uncorrupted, corrupted.to_vec(), CorruptedPolicy::ExplicitMatrix(m))
        .expect("ascending construction is a valid instance")
}

/// Builds and machine-checks the two-instance counterexample, or reports
/// `NoWitness` when the algorithm met the query bound.
pub fn construct_counterexample(state: &Adversary, output: &CandidateSet) -> Result<CounterexampleOutcome, AdversaryError> {
    let (n, k) = (state.n, state.k);
    let want = output_size(n, k);
    if output.len() != want {
        return Err(AdversaryError::OutputSize { got: output.len(), want });
    }
    if state.answered() >= lower_bound(n, k) {
        return Ok(CounterexampleOutcome::NoWitness);
    }
    let Some(witness) = (0..n)
        .map(ElementId::from)
        .find(|&e| !output.contains(e) && state.beaten_by(e).len() <= k)
    else {
        return Ok(CounterexampleOutcome::NoWitness);
    };

    let beaters: Vec<ElementId> = state.beaten_by(witness).iter().copied().collect();
    let mut corrupted: BTreeSet<ElementId> = state.beaten_by(witness).clone();
    for e in (0..n).map(ElementId::from) {
        if corrupted.len() == k {
            break;
        }
        if e != witness {
            corrupted.insert(e);
        }
    }
    let corrupted: Vec<ElementId> = corrupted.into_iter().collect();
    let first_instance = ascending_with(n, &corrupted, None);
    let second_instance = ascending_with(n, &corrupted, Some((witness, &beaters)));
    let cx = Counterexample { witness, beaters, corrupted, first_instance, second_instance, transcript: state.transcript().clone() };
    validate(&cx, output)?;
    Ok(CounterexampleOutcome::Found(Box::new(cx)))
}

/// Replays the transcript on both instances and checks every structural
/// claim by brute force.
pub fn validate(cx: &Counterexample, output: &CandidateSet) -> Result<(), AdversaryError> {
    let fail = |m: String| Err(AdversaryError::Validation(m));
    let (first, second) = (&cx.first_instance, &cx.second_instance);
    let n = first.n();
    let k = cx.corrupted.len();
    if cx.corrupted.contains(&cx.witness) {
        return fail("witness is corrupted".into());
    }
    if cx.corrupted.len() != first.k() || cx.beaters.iter().any(|b| !cx.corrupted.contains(b)) {
        return fail("beaters are not a subset of a size-k corrupted set".into());
    }
    if second.corrupted() != cx.corrupted.as_slice() || first.corrupted() != cx.corrupted.as_slice() {
        return fail("instances disagree on the corrupted set".into());
    }
    for r in &cx.transcript.records {
        if r.outcome.loser == cx.witness && !cx.beaters.contains(&r.outcome.winner) {
            return fail(format!("witness was beaten by uncorrupted {}", r.outcome.winner));
        }
    }
    for (name, spec) in [("first", first), ("second", second)] {
        match cx.transcript.first_mismatch(&mut spec.oracle()) {
            Ok(None) => {}
            Ok(Some(i)) => return fail(format!("transcript record {i} replays differently on the {name} instance")),
            Err(e) => return fail(format!("replay on the {name} instance errored: {e}")),
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let (a, b) = (ElementId::from(a), ElementId::from(b));
            let (w1, w2) = (first.winner(a, b), second.winner(a, b));
            if w1 != a.max(b) {
                return fail(format!("first instance is not the ascending graph at ({a}, {b})"));
            }
            if w1 != w2 && a != cx.witness && b != cx.witness {
                return fail(format!("instances differ on ({a}, {b}), which avoids the witness"));
            }
            if a == cx.witness || b == cx.witness {
                let other = if a == cx.witness { b } else { a };
                let expect = if cx.beaters.contains(&other) { other } else { cx.witness };
                if w2 != expect {
                    return fail(format!("witness edge to {other} not rewired"));
                }
            }
        }
    }
    let gt = ground_truth(second);
    if gt.maximum != cx.witness {
        return fail(format!("second instance maximum is {}, not the witness", gt.maximum));
    }
    let uncorrupted: Vec<ElementId> = (0..n).map(ElementId::from).filter(|e| !second.is_corrupted(*e)).collect();
    for &u in &uncorrupted {
        if u != cx.witness && second.winner(cx.witness, u) != cx.witness {
            return fail(format!("witness does not beat uncorrupted {u}"));
        }
    }
    if gt.rank[cx.witness.index()] > k {
        return fail("witness rank exceeds k".into());
    }
    if output.contains(gt.maximum) {
        return fail("second instance maximum is inside the output set".into());
    }
    Ok(())
}

/// Outcome of running an algorithm against the adversary under a budget.
#[derive(Clone, Debug)]
pub struct AdversaryRun {
    pub output: CandidateSet,
    pub answered: u64,
    pub truncated: bool,
    pub outcome: CounterexampleOutcome,
}

/// Output of an algorithm cut off by its budget: the `min(n, 2k+1)`
/// elements with the fewest distinct observed beaters, ties by smaller id.
/// Depends only on the transcript, so it is a legal deterministic output.
pub fn truncated_output(state: &Adversary) -> CandidateSet {
    let n = state.n;
    let mut order: Vec<ElementId> = (0..n).map(ElementId::from).collect();
    order.sort_by_key(|&e| (state.beaten_by(e).len(), e));
    order.into_iter().take(output_size(n, state.k)).collect()
}

/// Runs `algorithm` against a fresh adversary limited to `budget` queries.
/// An algorithm that exhausts the budget outputs [`truncated_output`].
pub fn run_against_adversary(algorithm: Algorithm, n: usize, k: usize, budget: u64, seed: u64) -> Result<AdversaryRun, AlgorithmError> {
    algorithm.check(n, k)?;
    let mut oracle = Recorder::new(Adversary::new(n, k), k, QueryBudget::Limited(budget));
    let result = algorithm.run(&mut oracle, n, k, seed);
    let (state, _) = oracle.into_parts();
    let (output, truncated) = match result {
        Ok(out) => (out, false),
        Err(AlgorithmError::Oracle(OracleError::BudgetExhausted { .. })) => (truncated_output(&state), true),
        Err(e) => return Err(e),
    };
    let outcome = construct_counterexample(&state, &output).map_err(|e| AlgorithmError::Precondition(e.to_string()))?;
    Ok(AdversaryRun { output, answered: state.answered(), truncated, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::det_max_find;

    fn e(i: u32) -> ElementId {
        ElementId(i)
    }

    #[test]
    fn answers_larger_index() {
        let mut a = Adversary::new(6, 1);
        assert_eq!(a.answer(e(0), e(5)).unwrap().winner, e(5));
        assert_eq!(a.smaller_count(e(0)), 1);
        assert_eq!(a.answer(e(5), e(0)).unwrap().winner, e(5));
        assert_eq!(a.smaller_count(e(0)), 2);
        assert_eq!(a.beaten_by(e(0)).len(), 1);
        assert!(a.answer(e(2), e(2)).is_err());
    }

    #[test]
    fn beaten_by_collects_distinct_winners() {
        let mut a = Adversary::new(6, 1);
        for j in 1..4 {
            a.answer(e(0), e(j)).unwrap();
        }
        assert_eq!(a.beaten_by(e(0)).iter().copied().collect::<Vec<_>>(), vec![e(1), e(2), e(3)]);
        let total: u64 = (0..6).map(|i| a.smaller_count(e(i))).sum();
        assert_eq!(total, a.answered());
    }

    #[test]
    fn zero_query_counterexample() {
        let a = Adversary::new(6, 1);
        let out: CandidateSet = [3, 4, 5].into_iter().map(e).collect();
        let cx = construct_counterexample(&a, &out).unwrap();
        let cx = cx.counterexample().expect("counterexample");
        assert_eq!(cx.witness, e(0));
        assert_eq!(cx.corrupted, vec![e(1)]);
        assert!(cx.beaters.is_empty());
        let s = &cx.second_instance;
        // nothing beat the witness, so it beats everyone, padding included
        for j in 1..6 {
            assert_eq!(s.winner(e(0), e(j)), e(0));
        }
        assert_eq!(cx.first_instance.winner(e(0), e(1)), e(1));
        assert_eq!(ground_truth(s).maximum, e(0));
        assert!(!out.contains(e(0)));
        assert_eq!(cx.first_instance.maximum(), e(5));
    }

    #[test]
    fn full_det_run_has_no_witness() {
        let mut a = Adversary::new(10, 2);
        let out = det_max_find(&mut a, 10, 2).unwrap();
        assert_eq!(a.answered(), 35);
        assert!(matches!(construct_counterexample(&a, &out).unwrap(), CounterexampleOutcome::NoWitness));
    }

    #[test]
    fn crippled_run_is_defeated() {
        let run = run_against_adversary(Algorithm::Det, 10, 2, 14, 0).unwrap();
        assert!(run.truncated);
        assert_eq!(run.answered, 14);
        let cx = run.outcome.counterexample().expect("under budget must be defeated");
        assert_eq!(cx.transcript.len(), 14);
        assert_eq!(cx.transcript.first_mismatch(&mut cx.first_instance.oracle()).unwrap(), None);
        assert_eq!(cx.transcript.first_mismatch(&mut cx.second_instance.oracle()).unwrap(), None);
        assert!(!run.output.contains(cx.witness));
    }

    #[test]
    fn padding_below_witness_keeps_transcript() {
        // witness 2 beat padding element 1 in the transcript; losing to all
        // corrupted elements would contradict that answer
        let mut a = Adversary::new(8, 2);
        a.answer(e(1), e(2)).unwrap();
        a.answer(e(0), e(1)).unwrap();
        a.answer(e(0), e(2)).unwrap();
        a.answer(e(0), e(3)).unwrap();
        a.answer(e(1), e(3)).unwrap();
        a.answer(e(1), e(4)).unwrap();
        let out: CandidateSet = [3, 4, 5, 6, 7].into_iter().map(e).collect();
        let cx = construct_counterexample(&a, &out).unwrap();
        let cx = cx.counterexample().unwrap();
        assert_eq!(cx.witness, e(2));
        assert_eq!(cx.corrupted, vec![e(0), e(1)]);
        assert!(cx.beaters.is_empty());
        assert_eq!(cx.second_instance.winner(e(1), e(2)), e(2));
        assert_eq!(cx.transcript.first_mismatch(&mut cx.second_instance.oracle()).unwrap(), None);
    }

    #[test]
    fn rejects_wrong_output_size() {
        let a = Adversary::new(6, 1);
        let out: CandidateSet = [4, 5].into_iter().map(e).collect();
        assert!(matches!(construct_counterexample(&a, &out), Err(AdversaryError::OutputSize { .. })));
    }

    #[test]
    fn validation_catches_tampering() {
        let a = Adversary::new(6, 1);
        let out: CandidateSet = [3, 4, 5].into_iter().map(e).collect();
        let CounterexampleOutcome::Found(mut cx) = construct_counterexample(&a, &out).unwrap() else { panic!() };
        cx.witness = e(4);
        assert!(validate(&cx, &out).is_err());
    }
}
