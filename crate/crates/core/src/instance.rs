//! Instance families, ground truth, and the instance text format.
//!
//! An [`InstanceSpec`] fixes the full comparison graph: the uncorrupted
//! elements form a transitive tournament given by `uncorrupted_order`
//! (position 0 is the uncorrupted maximum), and every edge with a corrupted
//! endpoint is decided by a [`CorruptedPolicy`].
//!
//! Rules for edges between two corrupted elements under `AllWin`/`AllLose`
//! and for the cyclic rule depend only on positions in the `corrupted` and
//! `uncorrupted_order` lists, so relabeling ids preserves them exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{check_pair, CompareOutcome, ComparisonOracle, ElementId, OracleError};
use crate::seeds::splitmix64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("parameter error: {0}")]
    Param(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// How edges incident to corrupted elements are directed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorruptedPolicy {
    /// Corrupted elements beat every uncorrupted element.
    AllWin,
    /// Corrupted elements lose to every uncorrupted element.
    AllLose,
    /// Each corrupted-incident edge is an independent fair coin keyed by
    /// `(seed, unordered pair)`.
    SeededRandom(u64),
    /// Winner of every corrupted-incident pair, keyed by `(min, max)` id.
    ExplicitMatrix(HashMap<(u32, u32), ElementId>),
    /// Symmetric cycle over `uncorrupted_order[..len - k] ++ corrupted`,
    /// each member beating the next `span` members; cycle members beat
    /// everything outside the cycle.
    CyclicRule,
}

impl CorruptedPolicy {
    pub fn tag(&self) -> String {
        match self {
            CorruptedPolicy::AllWin => "allwin".into(),
            CorruptedPolicy::AllLose => "alllose".into(),
            CorruptedPolicy::SeededRandom(s) => format!("seeded {s}"),
            CorruptedPolicy::ExplicitMatrix(_) => "explicit".into(),
            CorruptedPolicy::CyclicRule => "cyclic".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Uncorrupted(u32),
    Corrupted(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Cycle {
    pos: Vec<u32>,
    len: u32,
    span: u32,
}

const NOT_IN_CYCLE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSpec {
    n: usize,
    k: usize,
    uncorrupted_order: Vec<ElementId>,
    corrupted: Vec<ElementId>,
    policy: CorruptedPolicy,
    provisional: bool,
    slot: Vec<Slot>,
    cycle: Option<Cycle>,
}

#[inline]
fn key(a: ElementId, b: ElementId) -> (u32, u32) {
    if a < b {
        (a.0, b.0)
    } else {
        (b.0, a.0)
    }
}

/// Number of unordered pairs with at least one corrupted endpoint.
pub fn corrupted_pair_count(n: usize, k: usize) -> usize {
    let clean = n - k;
    n * (n - 1) / 2 - clean * clean.saturating_sub(1) / 2
}

impl InstanceSpec {
    pub fn new(
        n: usize,
        k: usize,
        uncorrupted_order: Vec<ElementId>,
        corrupted: Vec<ElementId>,
        policy: CorruptedPolicy,
    ) -> Result<Self, InstanceError> {
        let invalid = |m: String| Err(InstanceError::Invalid(m));
        if n < 2 {
            return invalid(format!("n = {n} must be at least 2"));
        }
        if k >= n {
            return invalid(format!("k = {k} must be at most n - 1 = {}", n - 1));
        }
        if corrupted.len() != k {
            return invalid(format!("k = {k} but {} corrupted ids listed", corrupted.len()));
        }
        if uncorrupted_order.len() != n - k {
            return invalid(format!(
                "expected {} uncorrupted ids, found {}",
                n - k,
                uncorrupted_order.len()
            ));
        }
        let mut slot: Vec<Option<Slot>> = vec![None; n];
        let listed = uncorrupted_order
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, Slot::Uncorrupted(i as u32)))
            .chain(corrupted.iter().enumerate().map(|(i, &e)| (e, Slot::Corrupted(i as u32))));
        for (e, s) in listed {
            if e.index() >= n {
                return invalid(format!("id {e} out of range for n = {n}"));
            }
            if slot[e.index()].replace(s).is_some() {
                return invalid(format!("id {e} listed more than once"));
            }
        }
        let slot: Vec<Slot> = slot.into_iter().map(|s| s.expect("all ids covered")).collect();

        if let CorruptedPolicy::ExplicitMatrix(m) = &policy {
            let is_corrupt = |i: u32| matches!(slot[i as usize], Slot::Corrupted(_));
            for (&(a, b), &w) in m {
                if a >= b || b as usize >= n {
                    return invalid(format!("explicit entry ({a}, {b}) is not a valid ordered pair"));
                }
                if !is_corrupt(a) && !is_corrupt(b) {
                    return invalid(format!("explicit entry ({a}, {b}) has no corrupted endpoint"));
                }
                if w.0 != a && w.0 != b {
                    return invalid(format!("explicit winner {w} not in pair ({a}, {b})"));
                }
            }
            let want = corrupted_pair_count(n, k);
            if m.len() != want {
                return invalid(format!(
                    "explicit matrix has {} entries, expected {want} corrupted-incident pairs",
                    m.len()
                ));
            }
        }

        let cycle = matches!(policy, CorruptedPolicy::CyclicRule).then(|| {
            let len = n.min(2 * k + 1);
            let span = if n >= 2 * k + 1 { k } else { (n - 1) / 2 };
            let mut pos = vec![NOT_IN_CYCLE; n];
            let members = uncorrupted_order[..len - k].iter().chain(corrupted.iter());
            for (i, e) in members.enumerate() {
                pos[e.index()] = i as u32;
            }
            Cycle { pos, len: len as u32, span: span as u32 }
        });

        Ok(InstanceSpec { n, k, uncorrupted_order, corrupted, policy, provisional: false, slot, cycle })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn uncorrupted_order(&self) -> &[ElementId] {
        &self.uncorrupted_order
    }

    pub fn corrupted(&self) -> &[ElementId] {
        &self.corrupted
    }

    pub fn policy(&self) -> &CorruptedPolicy {
        &self.policy
    }

    /// True for the ascending instance whose corrupted set has not been
    /// fixed yet.
    pub fn is_provisional(&self) -> bool {
        self.provisional
    }

    pub fn is_corrupted(&self, e: ElementId) -> bool {
        matches!(self.slot[e.index()], Slot::Corrupted(_))
    }

    /// The uncorrupted maximum.
    pub fn maximum(&self) -> ElementId {
        self.uncorrupted_order[0]
    }

    /// Winner of the edge `{a, b}`. Panics on an invalid pair.
    pub fn winner(&self, a: ElementId, b: ElementId) -> ElementId {
        assert!(a != b && a.index() < self.n && b.index() < self.n, "invalid pair ({a}, {b})");
        let (sa, sb) = (self.slot[a.index()], self.slot[b.index()]);
        if let (Slot::Uncorrupted(pa), Slot::Uncorrupted(pb)) = (sa, sb) {
            return if pa < pb { a } else { b };
        }
        match &self.policy {
            CorruptedPolicy::AllWin | CorruptedPolicy::AllLose => {
                let corrupt_wins = matches!(self.policy, CorruptedPolicy::AllWin);
                match (sa, sb) {
                    (Slot::Corrupted(ia), Slot::Corrupted(ib)) => {
                        if ia < ib {
                            a
                        } else {
                            b
                        }
                    }
                    (Slot::Corrupted(_), _) => {
                        if corrupt_wins {
                            a
                        } else {
                            b
                        }
                    }
                    _ => {
                        if corrupt_wins {
                            b
                        } else {
                            a
                        }
                    }
                }
            }
            CorruptedPolicy::SeededRandom(seed) => {
                let (lo, hi) = key(a, b);
                let h = splitmix64(seed ^ splitmix64(((lo as u64) << 32) | hi as u64));
                ElementId(if h & 1 == 0 { lo } else { hi })
            }
            CorruptedPolicy::ExplicitMatrix(m) => m[&key(a, b)],
            CorruptedPolicy::CyclicRule => {
                let c = self.cycle.as_ref().expect("cycle built for cyclic policy");
                let (pa, pb) = (c.pos[a.index()], c.pos[b.index()]);
                match (pa == NOT_IN_CYCLE, pb == NOT_IN_CYCLE) {
                    (false, true) => a,
                    (true, false) => b,
                    (true, true) => unreachable!("corrupted ids are always cycle members"),
                    (false, false) => {
                        let d = (pb + c.len - pa) % c.len;
                        if d <= c.span {
                            a
                        } else if c.len - d <= c.span {
                            b
                        } else if pa < pb {
                            // antipodal pair on an even cycle
                            a
                        } else {
                            b
                        }
                    }
                }
            }
        }
    }

    pub fn oracle(&self) -> InstanceOracle<'_> {
        InstanceOracle { spec: self }
    }

    /// Winners of all pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn answer_matrix(&self) -> Vec<ElementId> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for a in 0..self.n {
            for b in a + 1..self.n {
                out.push(self.winner(a.into(), b.into()));
            }
        }
        out
    }

    /// Materializes the current policy as an explicit matrix.
    pub fn to_explicit(&self) -> InstanceSpec {
        let mut m = HashMap::with_capacity(corrupted_pair_count(self.n, self.k));
        for &c in &self.corrupted {
            for o in 0..self.n {
                let o = ElementId::from(o);
                if o != c {
                    m.entry(key(c, o)).or_insert_with(|| self.winner(c, o));
                }
            }
        }
        InstanceSpec::new(
            self.n,
            self.k,
            self.uncorrupted_order.clone(),
            self.corrupted.clone(),
            CorruptedPolicy::ExplicitMatrix(m),
        )
        .expect("materialized matrix is valid")
    }

    /// Renames every id `i` to `perm[i]`; the answer matrix is conjugated.
    pub fn relabel(&self, perm: &[ElementId]) -> Result<InstanceSpec, InstanceError> {
        if perm.len() != self.n {
            return Err(InstanceError::Param(format!("permutation has length {}, expected {}", perm.len(), self.n)));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p.index() >= self.n || std::mem::replace(&mut seen[p.index()], true) {
                return Err(InstanceError::Param("not a permutation".into()));
            }
        }
        let map = |e: &ElementId| perm[e.index()];
        let policy = match &self.policy {
            CorruptedPolicy::SeededRandom(_) => return self.to_explicit().relabel(perm),
            CorruptedPolicy::ExplicitMatrix(m) => CorruptedPolicy::ExplicitMatrix(
                m.iter()
                    .map(|(&(a, b), w)| (key(perm[a as usize], perm[b as usize]), map(w)))
                    .collect(),
            ),
            other => other.clone(),
        };
        let mut out = InstanceSpec::new(
            self.n,
            self.k,
            self.uncorrupted_order.iter().map(map).collect(),
            self.corrupted.iter().map(map).collect(),
            policy,
        )?;
        out.provisional = self.provisional;
        Ok(out)
    }

    /// Serializes to the instance text format.
    pub fn to_text(&self) -> String {
        let join = |v: &[ElementId]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = format!("{} {}\n{}\n{}\n{}\n", self.n, self.k, join(&self.uncorrupted_order), join(&self.corrupted), self.policy.tag());
        if let CorruptedPolicy::ExplicitMatrix(m) = &self.policy {
            let mut entries: Vec<_> = m.iter().collect();
            entries.sort_unstable_by_key(|(k, _)| **k);
            for ((a, b), w) in entries {
                let _ = writeln!(out, "{a} {b} {w}");
            }
        }
        out
    }

    /// Parses the instance text format. Syntax problems are reported as
    /// [`InstanceError::Parse`] with a 1-based line number; structurally
    /// well-formed text that violates an instance invariant yields
    /// [`InstanceError::Invalid`].
    pub fn from_text(text: &str) -> Result<InstanceSpec, InstanceError> {
        let lines: Vec<&str> = text.lines().collect();
        if text.trim().is_empty() {
            return Err(InstanceError::Parse { line: 1, msg: "empty instance".into() });
        }
        let perr = |line: usize, msg: String| InstanceError::Parse { line, msg };
        let line = |i: usize| -> Result<&str, InstanceError> {
            lines.get(i).copied().ok_or_else(|| perr(i + 1, "unexpected end of input".into()))
        };
        let ints = |i: usize| -> Result<Vec<u64>, InstanceError> {
            line(i)?
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|_| perr(i + 1, format!("not a non-negative integer: {t:?}"))))
                .collect()
        };
        let header = ints(0)?;
        let [n, k] = header[..] else {
            return Err(perr(1, "header must be `n k`".into()));
        };
        let ids = |v: Vec<u64>| v.into_iter().map(|x| ElementId(x as u32)).collect::<Vec<_>>();
        let uncorrupted = ids(ints(1)?);
        let corrupted = ids(ints(2)?);
        let tag_line = line(3)?;
        let tag: Vec<&str> = tag_line.split_whitespace().collect();
        let policy = match tag.as_slice() {
            ["allwin"] => CorruptedPolicy::AllWin,
            ["alllose"] => CorruptedPolicy::AllLose,
            ["cyclic"] => CorruptedPolicy::CyclicRule,
            ["seeded", s] => CorruptedPolicy::SeededRandom(s.parse().map_err(|_| perr(4, format!("bad seed {s:?}")))?),
            ["explicit"] => {
                let mut m = HashMap::new();
                for (i, l) in lines.iter().enumerate().skip(4) {
                    if l.trim().is_empty() {
                        continue;
                    }
                    let v = ints(i)?;
                    let [a, b, w] = v[..] else {
                        return Err(perr(i + 1, "explicit entry must be `a b winner`".into()));
                    };
                    let (a, b, w) = (ElementId(a as u32), ElementId(b as u32), ElementId(w as u32));
                    if a == b {
                        return Err(InstanceError::Invalid(format!("line {}: self-pair", i + 1)));
                    }
                    if m.insert(key(a, b), w).is_some() {
                        return Err(InstanceError::Invalid(format!("line {}: duplicate pair ({a}, {b})", i + 1)));
                    }
                }
                CorruptedPolicy::ExplicitMatrix(m)
            }
            _ => return Err(perr(4, format!("unknown policy tag {tag_line:?}"))),
        };
        if !matches!(policy, CorruptedPolicy::ExplicitMatrix(_)) {
            if let Some((i, _)) = lines.iter().enumerate().skip(4).find(|(_, l)| !l.trim().is_empty()) {
                return Err(perr(i + 1, "trailing content after policy line".into()));
            }
        }
        InstanceSpec::new(n as usize, k as usize, uncorrupted, corrupted, policy)
    }
}

/// Oracle answering from an [`InstanceSpec`].
#[derive(Clone, Copy, Debug)]
pub struct InstanceOracle<'a> {
    spec: &'a InstanceSpec,
}

impl ComparisonOracle for InstanceOracle<'_> {
    fn n(&self) -> usize {
        self.spec.n
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        check_pair(self.spec.n, a, b)?;
        Ok(CompareOutcome::of_pair(a, b, self.spec.winner(a, b)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    pub maximum: ElementId,
    /// `rank[i]`: number of elements that beat `i`.
    pub rank: Vec<usize>,
}

/// Maximum from the spec plus ranks by enumerating every incident edge.
pub fn ground_truth(spec: &InstanceSpec) -> GroundTruth {
    let n = spec.n();
    let mut rank = vec![0usize; n];
    for a in 0..n {
        for b in a + 1..n {
            let w = spec.winner(a.into(), b.into());
            let loser = if w.index() == a { b } else { a };
            rank[loser] += 1;
        }
    }
    GroundTruth { maximum: spec.maximum(), rank }
}

fn check_nk(n: usize, k: usize, min_k: usize) -> Result<(), InstanceError> {
    if n < 2 {
        return Err(InstanceError::Param(format!("n = {n} must be at least 2")));
    }
    if k < min_k || k > n - 1 {
        return Err(InstanceError::Param(format!("k = {k} must lie in [{min_k}, {}]", n - 1)));
    }
    Ok(())
}

fn ids(range: impl Iterator<Item = usize>) -> Vec<ElementId> {
    range.map(ElementId::from).collect()
}

/// Random arrangement of a random `(n - k)`-subset, corrupted edges per
/// `policy`. Deterministic in `seed`.
pub fn gen_random(n: usize, k: usize, policy: CorruptedPolicy, seed: u64) -> Result<InstanceSpec, InstanceError> {
    check_nk(n, k, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = ids(0..n);
    all.shuffle(&mut rng);
    let corrupted = all.split_off(n - k);
    InstanceSpec::new(n, k, all, corrupted, policy)
}

/// Symmetric hard instance for the output-size lower bound.
///
/// * `n == 2k+1`: id `i` beats `i+1 ..= i+k` (mod `2k+1`); ids `0..=k` are
///   uncorrupted with `0` the maximum.
/// * `n > 2k+1`: the same cycle on ids `0..=2k`, every member beating every
///   other id; ids `2k+1..n` are uncorrupted, smaller id larger.
/// * `n < 2k+1`: id `i` beats the next `(n-1)/2` ids cyclically; ids
///   `0..n-k` uncorrupted.
pub fn gen_cyclic(n: usize, k: usize) -> Result<InstanceSpec, InstanceError> {
    check_nk(n, k, 1)?;
    let (uncorrupted, corrupted) = if n >= 2 * k + 1 {
        (ids((0..=k).chain(2 * k + 1..n)), ids(k + 1..=2 * k))
    } else {
        (ids(0..n - k), ids(n - k..n))
    };
    InstanceSpec::new(n, k, uncorrupted, corrupted, CorruptedPolicy::CyclicRule)
}

/// Transitive tournament where the larger id always wins. The corrupted set
/// is left empty and the spec is marked provisional.
pub fn gen_ascending(n: usize) -> Result<InstanceSpec, InstanceError> {
    check_nk(n, 0, 0)?;
    let mut spec = InstanceSpec::new(n, 0, ids((0..n).rev()), Vec::new(), CorruptedPolicy::AllWin)?;
    spec.provisional = true;
    Ok(spec)
}

/// Uniformly random permutation of the id space.
pub fn random_permutation(n: usize, seed: u64) -> Vec<ElementId> {
    let mut perm = ids(0..n);
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

/// Relabels all ids by a uniformly random permutation drawn from `seed`.
pub fn shuffle_labels(spec: &InstanceSpec, seed: u64) -> InstanceSpec {
    spec.relabel(&random_permutation(spec.n(), seed)).expect("random permutation is valid")
}

/// The randomized lower bound's hard instance: the embedded cycle with all
/// labels shuffled.
pub fn gen_shuffled_cyclic(n: usize, k: usize, seed: u64) -> Result<InstanceSpec, InstanceError> {
    Ok(shuffle_labels(&gen_cyclic(n, k)?, seed))
}
