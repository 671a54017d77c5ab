//! Maximum-set algorithms. Each talks to the graph only through a
//! [`ComparisonOracle`] and returns a [`CandidateSet`] that should contain the
//! uncorrupted maximum.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Caching, ComparisonOracle, ElementId, OracleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgorithmError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// An algorithm's output set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CandidateSet {
    members: BTreeSet<ElementId>,
}

impl CandidateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.members.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.members.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<ElementId> {
        self.iter().collect()
    }
}

impl FromIterator<ElementId> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        CandidateSet { members: iter.into_iter().collect() }
    }
}

/// Losses observed for one element in its stage-2 sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankEstimate {
    pub element: ElementId,
    pub w: usize,
}

/// `min(n, 2k+1)`.
pub fn output_size(n: usize, k: usize) -> usize {
    n.min(k.saturating_mul(2).saturating_add(1))
}

fn check_oracle_size<O: ComparisonOracle + ?Sized>(oracle: &O, n: usize) -> Result<(), AlgorithmError> {
    if oracle.n() != n {
        return Err(AlgorithmError::Precondition(format!("oracle has {} elements, caller passed n = {n}", oracle.n())));
    }
    Ok(())
}

/// Queries every pair once, ranks elements by how many others beat them and
/// keeps the `min(n, 2k+1)` lowest ranks (ties by smaller id).
pub fn rank_baseline<O: ComparisonOracle + ?Sized>(oracle: &mut O, n: usize, k: usize) -> Result<CandidateSet, AlgorithmError> {
    if n == 0 {
        return Err(AlgorithmError::Precondition("n must be at least 1".into()));
    }
    check_oracle_size(oracle, n)?;
    let mut cache = Caching::new(oracle);
    let mut rank = vec![0usize; n];
    for a in 0..n {
        for b in a + 1..n {
            let out = cache.compare(a.into(), b.into())?;
            rank[out.loser.index()] += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (rank[i], i));
    Ok(order.into_iter().take(output_size(n, k)).map(ElementId::from).collect())
}

/// State of the working set at the moment an element is evicted.
#[derive(Debug)]
pub struct Eviction<'a> {
    /// The `2k+2` members before eviction, ascending by id.
    pub members: &'a [ElementId],
    /// `losses[i]`: members of the set that beat `members[i]`.
    pub losses: &'a [usize],
    pub evicted: ElementId,
}

pub fn det_max_find<O: ComparisonOracle + ?Sized>(oracle: &mut O, n: usize, k: usize) -> Result<CandidateSet, AlgorithmError> {
    det_max_find_observed(oracle, n, k, |_| {})
}

/// Deterministic scan keeping a working set of `2k+1` elements.
///
/// Elements are inserted in id order and compared with every current member
/// (results cached). Once the set holds `2k+2` elements, the lowest-id member
/// beaten by at least `k+1` others is evicted; eviction reads only the cache.
/// Uses exactly `(n-(k+1))(2k+1)` queries. `on_evict` sees every eviction.
pub fn det_max_find_observed<O, F>(oracle: &mut O, n: usize, k: usize, mut on_evict: F) -> Result<CandidateSet, AlgorithmError>
where
    O: ComparisonOracle + ?Sized,
    F: FnMut(&Eviction<'_>),
{
    if n < 2 * k + 2 {
        return Err(AlgorithmError::Precondition(format!("det_max_find needs n >= 2k+2, got n = {n}, k = {k}")));
    }
    check_oracle_size(oracle, n)?;
    let cap = 2 * k + 1;
    let mut cache = Caching::new(oracle);
    let mut set: Vec<ElementId> = Vec::with_capacity(cap + 1);
    let mut losses = vec![0usize; cap + 1];
    for x in (0..n).map(ElementId::from) {
        for &s in &set {
            cache.compare(x, s)?;
        }
        set.push(x);
        if set.len() > cap {
            for (i, &a) in set.iter().enumerate() {
                losses[i] = set.iter().filter(|&&b| b != a && cache.cached(a, b) == Some(b)).count();
            }
            let pos = losses
                .iter()
                .position(|&l| l > k)
                .expect("pigeonhole: some member of a (2k+2)-set loses to k+1 others");
            on_evict(&Eviction { members: &set, losses: &losses, evicted: set[pos] });
            set.remove(pos);
        }
    }
    Ok(set.into_iter().collect())
}

/// Exact query count of [`det_max_find`]: `(n-(k+1))(2k+1)`.
pub fn det_query_count(n: usize, k: usize) -> u64 {
    ((n - (k + 1)) * (2 * k + 1)) as u64
}

/// Derived sizes for [`prune_and_rank`] (natural log, ceilings).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneParams {
    /// Stage-1 samples, `ceil(2 n ln k / k^(1+c))`.
    pub samples: usize,
    /// Stage-2 sample size per element, `ceil(3 k^(2c) ln k)`.
    pub per_element: usize,
    /// Size of the low-`w` pool, `2k + ceil(k^(1-c))`.
    pub top: usize,
}

impl PruneParams {
    pub fn new(n: usize, k: usize, c: f64) -> Self {
        let (nf, kf) = (n as f64, k as f64);
        let ln_k = kf.ln();
        PruneParams {
            samples: (2.0 * nf * ln_k / kf.powf(1.0 + c)).ceil() as usize,
            per_element: (3.0 * kf.powf(2.0 * c) * ln_k).ceil() as usize,
            top: 2 * k + kf.powf(1.0 - c).ceil() as usize,
        }
    }

    /// Upper bound on total queries given the survivor count.
    pub fn query_bound(&self, n: usize, survivors: usize) -> u64 {
        (self.samples.saturating_sub(1) + (n - 1) + survivors * self.per_element) as u64
    }
}

/// Everything [`prune_and_rank_report`] did, for auditing against ground
/// truth.
#[derive(Clone, Debug)]
pub struct PruneReport {
    pub params: PruneParams,
    /// Stage-1 samples in draw order.
    pub samples: Vec<ElementId>,
    pub champion: ElementId,
    /// Stage-1 survivors ascending by id; always includes the champion.
    pub survivors: Vec<ElementId>,
    pub estimates: Vec<RankEstimate>,
    /// The `top` survivors with the smallest `w`.
    pub top: Vec<ElementId>,
    pub output: CandidateSet,
}

pub fn check_prune_params(n: usize, k: usize, c: f64) -> Result<(), AlgorithmError> {
    if k < 2 {
        return Err(AlgorithmError::Precondition(format!("prune_and_rank needs k >= 2, got k = {k}")));
    }
    if n < 2 * k + 2 {
        return Err(AlgorithmError::Precondition(format!("prune_and_rank needs n >= 2k+2, got n = {n}, k = {k}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(AlgorithmError::Precondition(format!("prune_and_rank needs 0 < c <= 1, got c = {c}")));
    }
    Ok(())
}

pub fn prune_and_rank<O: ComparisonOracle + ?Sized>(oracle: &mut O, n: usize, k: usize, c: f64, seed: u64) -> Result<CandidateSet, AlgorithmError> {
    prune_and_rank_report(oracle, n, k, c, seed).map(|r| r.output)
}

/// Draws `q` elements of `pool \ {element}` with replacement, compares
/// `element` against each, and counts its losses.
pub fn sample_rank<O, R>(oracle: &mut O, pool: &[ElementId], element: ElementId, q: usize, rng: &mut R) -> Result<RankEstimate, AlgorithmError>
where
    O: ComparisonOracle + ?Sized,
    R: Rng + ?Sized,
{
    let me = pool.iter().position(|&e| e == element);
    let others = pool.len() - usize::from(me.is_some());
    let mut w = 0;
    if others == 0 {
        return Ok(RankEstimate { element, w });
    }
    for _ in 0..q {
        let mut j = rng.gen_range(0..others);
        if me.is_some_and(|m| j >= m) {
            j += 1;
        }
        if oracle.compare(element, pool[j])?.winner != element {
            w += 1;
        }
    }
    Ok(RankEstimate { element, w })
}

/// Two-stage randomized algorithm.
///
/// Stage 1 keeps a running champion over uniform samples, then keeps only
/// elements that beat it (plus the champion). Stage 2 estimates each
/// survivor's rank from a random sample, takes the `2k + ceil(k^(1-c))` with
/// fewest losses and returns a uniformly random `(2k+1)`-subset of those.
pub fn prune_and_rank_report<O: ComparisonOracle + ?Sized>(oracle: &mut O, n: usize, k: usize, c: f64, seed: u64) -> Result<PruneReport, AlgorithmError> {
    check_prune_params(n, k, c)?;
    check_oracle_size(oracle, n)?;
    let params = PruneParams::new(n, k, c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut samples = Vec::with_capacity(params.samples);
    let mut champion: Option<ElementId> = None;
    for _ in 0..params.samples {
        let x = ElementId::from(rng.gen_range(0..n));
        samples.push(x);
        champion = match champion {
            None => Some(x),
            Some(t) if t == x => Some(t),
            Some(t) => Some(oracle.compare(x, t)?.winner),
        };
    }
    let champion = champion.expect("at least one stage-1 sample");

    let mut survivors = Vec::new();
    for x in (0..n).map(ElementId::from) {
        if x == champion || oracle.compare(x, champion)?.winner == x {
            survivors.push(x);
        }
    }

    let mut estimates = Vec::with_capacity(survivors.len());
    for &x in &survivors {
        estimates.push(sample_rank(oracle, &survivors, x, params.per_element, &mut rng)?);
    }

    let mut by_w = estimates.clone();
    by_w.sort_by_key(|r| (r.w, r.element));
    let top: Vec<ElementId> = by_w.iter().take(params.top).map(|r| r.element).collect();

    let want = 2 * k + 1;
    let output = if top.len() <= want {
        top.iter().copied().collect()
    } else {
        index::sample(&mut rng, top.len(), want).into_iter().map(|i| top[i]).collect()
    };

    Ok(PruneReport { params, samples, champion, survivors, estimates, top, output })
}

/// Query-free baseline: a uniformly random `min(n, 2k+1)`-subset.
pub fn random_subset(n: usize, k: usize, seed: u64) -> CandidateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, n, output_size(n, k)).into_iter().map(ElementId::from).collect()
}

/// Algorithm selector with a uniform invocation signature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    Rank,
    Det,
    PruneAndRank { c: f64 },
    RandomSubset,
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Rank => "rank",
            Algorithm::Det => "det",
            Algorithm::PruneAndRank { .. } => "par",
            Algorithm::RandomSubset => "subset",
        }
    }

    /// `c` for randomized pruning, `None` otherwise.
    pub fn c(&self) -> Option<f64> {
        match self {
            Algorithm::PruneAndRank { c } => Some(*c),
            _ => None,
        }
    }

    pub fn from_tag(tag: &str, c: f64) -> Option<Algorithm> {
        Some(match tag {
            "rank" => Algorithm::Rank,
            "det" => Algorithm::Det,
            "par" => Algorithm::PruneAndRank { c },
            "subset" => Algorithm::RandomSubset,
            _ => return None,
        })
    }

    /// Validates `(n, k)` before any oracle is built.
    pub fn check(&self, n: usize, k: usize) -> Result<(), AlgorithmError> {
        match *self {
            Algorithm::Rank | Algorithm::RandomSubset if n == 0 => Err(AlgorithmError::Precondition("n must be at least 1".into())),
            Algorithm::Rank | Algorithm::RandomSubset => Ok(()),
            Algorithm::Det if n < 2 * k + 2 => Err(AlgorithmError::Precondition(format!("det_max_find needs n >= 2k+2, got n = {n}, k = {k}"))),
            Algorithm::Det => Ok(()),
            Algorithm::PruneAndRank { c } => check_prune_params(n, k, c),
        }
    }

    pub fn run<O: ComparisonOracle + ?Sized>(&self, oracle: &mut O, n: usize, k: usize, seed: u64) -> Result<CandidateSet, AlgorithmError> {
        match *self {
            Algorithm::Rank => rank_baseline(oracle, n, k),
            Algorithm::Det => det_max_find(oracle, n, k),
            Algorithm::PruneAndRank { c } => prune_and_rank(oracle, n, k, c, seed),
            Algorithm::RandomSubset => {
                self.check(n, k)?;
                Ok(random_subset(n, k, seed))
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    /// Parses `rank`, `det`, `subset`, `par` (c = 0.5) or `par:<c>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, c) = match s.split_once(':') {
            Some((t, c)) => (t, c.parse::<f64>().map_err(|_| format!("bad c in {s:?}"))?),
            None => (s, 0.5),
        };
        Algorithm::from_tag(tag, c).ok_or_else(|| format!("unknown algorithm {s:?} (expected rank|det|par|subset)"))
    }
}
