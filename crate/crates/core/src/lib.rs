//! Finding the uncorrupted maximum when some elements answer comparisons
//! arbitrarily.
//!
//! `n` elements are compared through a black box. Among them, `k` are
//! corrupted: edges touching them may point anywhere (cycles included) but
//! are fixed. Edges between uncorrupted elements form a transitive
//! tournament. Algorithms output a set that must contain the uncorrupted
//! maximum; `min(n, 2k+1)` elements are necessary and sufficient.
//!
//! * [`model`]: oracle trait plus counting, caching, budget and transcript
//!   wrappers.
//! * [`instance`]: instance families (random, symmetric cycles, ascending,
//!   shuffled), ground truth, and the text format.
//! * [`algorithms`]: the exact-rank baseline, the deterministic
//!   `(n-(k+1))(2k+1)`-query scan, and randomized prune-and-rank.
//! * [`adversary`]: the adaptive adversary that defeats any deterministic
//!   algorithm asking fewer than `(n-(2k+1))(k+1)` queries.
//! * [`harness`]: trials, containment checks, Wilson-interval estimates.

pub mod adversary;
pub mod algorithms;
pub mod harness;
pub mod instance;
pub mod model;
pub mod seeds;

pub use adversary::{construct_counterexample, lower_bound, Adversary, Counterexample, CounterexampleOutcome};
pub use algorithms::{det_max_find, prune_and_rank, rank_baseline, Algorithm, AlgorithmError, CandidateSet, RankEstimate};
pub use harness::{contains_maximum, estimate_success, run_trial, InstanceFamily, PolicyKind, SuccessStats, TrialResult};
pub use instance::{gen_ascending, gen_cyclic, gen_random, ground_truth, shuffle_labels, CorruptedPolicy, GroundTruth, InstanceError, InstanceSpec};
pub use model::{CompareOutcome, ComparisonOracle, ElementId, OracleError, QueryBudget, Transcript};
