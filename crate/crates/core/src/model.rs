//! Element identity, the comparison-oracle contract, and the wrappers that
//! layer query accounting, caching, budgets and transcripts on top of it.
//!
//! A comparison oracle answers one question: which endpoint of the edge
//! `{a, b}` is the winner. Nothing else about an element is observable.
//! Answers are fixed per unordered pair, so asking twice never reveals
//! anything new; every invocation is still counted unless a [`Caching`]
//! layer sits in front of the counter.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Zero-based element index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ElementId {
    fn from(i: usize) -> Self {
        ElementId(i as u32)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Result of a single comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CompareOutcome {
    pub winner: ElementId,
    pub loser: ElementId,
}

impl CompareOutcome {
    /// Builds the outcome of querying `{a, b}` given which endpoint won.
    pub fn of_pair(a: ElementId, b: ElementId, winner: ElementId) -> Self {
        debug_assert!(winner == a || winner == b);
        let loser = if winner == a { b } else { a };
        CompareOutcome { winner, loser }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryRecord {
    pub seq: u64,
    pub a: ElementId,
    pub b: ElementId,
    pub outcome: CompareOutcome,
}

/// Ordered record of every query an algorithm issued and what it was told.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Transcript {
    pub n: usize,
    pub k: usize,
    pub records: Vec<QueryRecord>,
}

impl Transcript {
    pub fn new(n: usize, k: usize) -> Self {
        Transcript { n, k, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, a: ElementId, b: ElementId, outcome: CompareOutcome) {
        let seq = self.records.len() as u64;
        self.records.push(QueryRecord { seq, a, b, outcome });
    }

    /// Re-issues every recorded query against `oracle` and returns the index
    /// of the first record whose answer differs, or `None` if all agree.
    pub fn first_mismatch<O: ComparisonOracle + ?Sized>(
        &self,
        oracle: &mut O,
    ) -> Result<Option<usize>, OracleError> {
        for (i, rec) in self.records.iter().enumerate() {
            let got = oracle.compare(rec.a, rec.b)?;
            if got.winner != rec.outcome.winner {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Serializes to the line format: header `n k`, then `seq a b winner`
    /// per record.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.k);
        for r in &self.records {
            out.push_str(&format!("{} {} {} {}\n", r.seq, r.a, r.b, r.outcome.winner));
        }
        out
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TranscriptParseError {
    #[error("empty transcript")]
    Empty,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn parse_fields<const N: usize>(line: &str, lineno: usize) -> Result<[u64; N], TranscriptParseError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != N {
        return Err(TranscriptParseError::Syntax {
            line: lineno,
            msg: format!("expected {N} integers, found {}", fields.len()),
        });
    }
    let mut out = [0u64; N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f.parse().map_err(|_| TranscriptParseError::Syntax {
            line: lineno,
            msg: format!("not a non-negative integer: {f:?}"),
        })?;
    }
    Ok(out)
}

impl FromStr for Transcript {
    type Err = TranscriptParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i, header) = lines.next().ok_or(TranscriptParseError::Empty)?;
        let [n, k] = parse_fields::<2>(header, i + 1)?;
        let mut t = Transcript::new(n as usize, k as usize);
        for (i, line) in lines {
            let lineno = i + 1;
            let [seq, a, b, w] = parse_fields::<4>(line, lineno)?;
            let syntax = |msg: &str| TranscriptParseError::Syntax { line: lineno, msg: msg.to_string() };
            if seq != t.records.len() as u64 {
                return Err(syntax("sequence numbers must start at 0 and increase by 1"));
            }
            if a >= n || b >= n {
                return Err(syntax("element id out of range"));
            }
            if a == b {
                return Err(syntax("self-comparison"));
            }
            if w != a && w != b {
                return Err(syntax("winner is not an endpoint of the queried pair"));
            }
            let (a, b, w) = (ElementId(a as u32), ElementId(b as u32), ElementId(w as u32));
            t.push(a, b, CompareOutcome::of_pair(a, b, w));
        }
        Ok(t)
    }
}

/// Cap on oracle invocations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QueryBudget {
    #[default]
    Unlimited,
    Limited(u64),
}

impl QueryBudget {
    pub fn allows(self, used: u64) -> bool {
        match self {
            QueryBudget::Unlimited => true,
            QueryBudget::Limited(limit) => used < limit,
        }
    }
}

impl From<Option<u64>> for QueryBudget {
    fn from(v: Option<u64>) -> Self {
        v.map_or(QueryBudget::Unlimited, QueryBudget::Limited)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("invalid query ({a}, {b}) on {n} elements")]
    InvalidQuery { a: ElementId, b: ElementId, n: usize },
    #[error("query budget of {limit} exhausted")]
    BudgetExhausted { limit: u64, transcript: Box<Transcript> },
}

/// Checks the pair precondition shared by every base oracle.
pub fn check_pair(n: usize, a: ElementId, b: ElementId) -> Result<(), OracleError> {
    if a == b || a.index() >= n || b.index() >= n {
        Err(OracleError::InvalidQuery { a, b, n })
    } else {
        Ok(())
    }
}

/// Black-box access to the comparison graph.
pub trait ComparisonOracle {
    /// Number of elements.
    fn n(&self) -> usize;

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError>;
}

impl<O: ComparisonOracle + ?Sized> ComparisonOracle for &mut O {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        (**self).compare(a, b)
    }
}

impl<O: ComparisonOracle + ?Sized> ComparisonOracle for Box<O> {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        (**self).compare(a, b)
    }
}

/// Convenience free function mirroring `oracle.compare(a, b)`.
pub fn compare<O: ComparisonOracle + ?Sized>(
    oracle: &mut O,
    a: ElementId,
    b: ElementId,
) -> Result<CompareOutcome, OracleError> {
    oracle.compare(a, b)
}

/// Counts every call that reaches it, repeats included.
#[derive(Debug)]
pub struct Counting<O> {
    inner: O,
    count: u64,
}

impl<O: ComparisonOracle> Counting<O> {
    pub fn new(inner: O) -> Self {
        Counting { inner, count: 0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: ComparisonOracle> ComparisonOracle for Counting<O> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        self.count += 1;
        self.inner.compare(a, b)
    }
}

pub fn with_counting<O: ComparisonOracle>(oracle: O) -> Counting<O> {
    Counting::new(oracle)
}

#[inline]
fn pair_key(a: ElementId, b: ElementId) -> (u32, u32) {
    if a < b {
        (a.0, b.0)
    } else {
        (b.0, a.0)
    }
}

/// Answers repeat queries on an unordered pair from memory.
#[derive(Debug)]
pub struct Caching<O> {
    inner: O,
    cache: HashMap<(u32, u32), ElementId>,
}

impl<O: ComparisonOracle> Caching<O> {
    pub fn new(inner: O) -> Self {
        Caching { inner, cache: HashMap::new() }
    }

    /// Cached winner of `{a, b}`, if that pair has been asked before.
    pub fn cached(&self, a: ElementId, b: ElementId) -> Option<ElementId> {
        self.cache.get(&pair_key(a, b)).copied()
    }

    pub fn cached_pairs(&self) -> usize {
        self.cache.len()
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: ComparisonOracle> ComparisonOracle for Caching<O> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        check_pair(self.inner.n(), a, b)?;
        let key = pair_key(a, b);
        if let Some(&w) = self.cache.get(&key) {
            return Ok(CompareOutcome::of_pair(a, b, w));
        }
        let out = self.inner.compare(a, b)?;
        self.cache.insert(key, out.winner);
        Ok(out)
    }
}

pub fn with_caching<O: ComparisonOracle>(oracle: O) -> Caching<O> {
    Caching::new(oracle)
}

/// Records a transcript of answered queries and enforces a [`QueryBudget`].
///
/// On the query after the limit is reached the call fails with
/// [`OracleError::BudgetExhausted`], which carries the transcript so far;
/// the refused query never reaches the inner oracle.
#[derive(Debug)]
pub struct Recorder<O> {
    inner: O,
    budget: QueryBudget,
    transcript: Transcript,
}

impl<O: ComparisonOracle> Recorder<O> {
    pub fn new(inner: O, k: usize, budget: QueryBudget) -> Self {
        let n = inner.n();
        Recorder { inner, budget, transcript: Transcript::new(n, k) }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn answered(&self) -> u64 {
        self.transcript.len() as u64
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_parts(self) -> (O, Transcript) {
        (self.inner, self.transcript)
    }
}

impl<O: ComparisonOracle> ComparisonOracle for Recorder<O> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        if !self.budget.allows(self.answered()) {
            let QueryBudget::Limited(limit) = self.budget else { unreachable!() };
            return Err(OracleError::BudgetExhausted {
                limit,
                transcript: Box::new(self.transcript.clone()),
            });
        }
        let out = self.inner.compare(a, b)?;
        self.transcript.push(a, b, out);
        Ok(out)
    }
}

pub fn with_budget<O: ComparisonOracle>(oracle: O, k: usize, budget: QueryBudget) -> Recorder<O> {
    Recorder::new(oracle, k, budget)
}

/// Oracle backed by an arbitrary winner function; mostly for tests.
pub struct FnOracle<F> {
    n: usize,
    winner: F,
}

impl<F: FnMut(ElementId, ElementId) -> ElementId> FnOracle<F> {
    pub fn new(n: usize, winner: F) -> Self {
        FnOracle { n, winner }
    }
}

impl<F: FnMut(ElementId, ElementId) -> ElementId> ComparisonOracle for FnOracle<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn compare(&mut self, a: ElementId, b: ElementId) -> Result<CompareOutcome, OracleError> {
        check_pair(self.n, a, b)?;
        let w = (self.winner)(a, b);
        Ok(CompareOutcome::of_pair(a, b, w))
    }
}
