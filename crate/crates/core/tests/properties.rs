use proptest::prelude::*;

use corrupt_max::adversary::{construct_counterexample, lower_bound, Adversary, CounterexampleOutcome};
use corrupt_max::algorithms::{det_max_find, det_query_count, rank_baseline, CandidateSet};
use corrupt_max::instance::{gen_cyclic, gen_random, gen_shuffled_cyclic, ground_truth, shuffle_labels, CorruptedPolicy, InstanceSpec};
use corrupt_max::model::{with_budget, with_caching, with_counting, ComparisonOracle, ElementId, OracleError, QueryBudget, Transcript};

fn policy() -> impl Strategy<Value = CorruptedPolicy> {
    prop_oneof![
        Just(CorruptedPolicy::AllWin),
        Just(CorruptedPolicy::AllLose),
        any::<u64>().prop_map(CorruptedPolicy::SeededRandom),
    ]
}

fn instance(max_n: usize) -> impl Strategy<Value = InstanceSpec> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 0..n, policy(), any::<u64>()))
        .prop_map(|(n, k, p, seed)| gen_random(n, k, p, seed).unwrap())
}

fn transitive_on(spec: &InstanceSpec, members: &[ElementId]) -> bool {
    // a tournament is transitive iff its score sequence is 0, 1, ..., m-1
    let mut wins: Vec<usize> = members
        .iter()
        .map(|&a| members.iter().filter(|&&b| b != a && spec.winner(a, b) == a).count())
        .collect();
    wins.sort_unstable();
    wins.iter().enumerate().all(|(i, &w)| i == w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn antisymmetric_and_repeatable(spec in instance(24)) {
        let mut o = spec.oracle();
        for a in 0..spec.n() {
            for b in 0..spec.n() {
                if a == b { continue; }
                let (a, b) = (ElementId::from(a), ElementId::from(b));
                let x = o.compare(a, b).unwrap();
                let y = o.compare(b, a).unwrap();
                prop_assert_eq!(x.winner, y.winner);
                prop_assert_eq!(o.compare(a, b).unwrap(), x);
                prop_assert!(x.winner != x.loser);
            }
        }
    }

    #[test]
    fn uncorrupted_edges_are_transitive(spec in instance(64)) {
        prop_assert!(transitive_on(&spec, spec.uncorrupted_order()));
        let gt = ground_truth(&spec);
        prop_assert!(gt.rank[gt.maximum.index()] <= spec.k());
        prop_assert!(!spec.is_corrupted(gt.maximum));
    }

    #[test]
    fn generators_are_seed_deterministic(n in 2usize..40, k_frac in 0.0f64..1.0, seed: u64, cseed: u64) {
        let k = ((n - 1) as f64 * k_frac) as usize;
        let a = gen_random(n, k, CorruptedPolicy::SeededRandom(cseed), seed).unwrap();
        let b = gen_random(n, k, CorruptedPolicy::SeededRandom(cseed), seed).unwrap();
        prop_assert_eq!(a.answer_matrix(), b.answer_matrix());
        if k >= 1 {
            let s1 = gen_shuffled_cyclic(n, k, seed).unwrap();
            let s2 = gen_shuffled_cyclic(n, k, seed).unwrap();
            prop_assert_eq!(s1.answer_matrix(), s2.answer_matrix());
        }
    }

    #[test]
    fn text_round_trip(spec in instance(20), shuffle: bool, seed: u64) {
        let spec = if shuffle { shuffle_labels(&spec, seed) } else { spec };
        let back = InstanceSpec::from_text(&spec.to_text()).unwrap();
        prop_assert_eq!(back.answer_matrix(), spec.answer_matrix());
    }

    #[test]
    fn cyclic_every_shape_valid(n in 2usize..30, k_frac in 0.0f64..1.0) {
        let k = 1 + ((n - 2) as f64 * k_frac) as usize;
        let spec = gen_cyclic(n, k).unwrap();
        prop_assert!(transitive_on(&spec, spec.uncorrupted_order()));
        let gt = ground_truth(&spec);
        prop_assert!(gt.rank[gt.maximum.index()] <= k);
        let r = rank_baseline(&mut spec.oracle(), n, k).unwrap();
        prop_assert!(r.contains(gt.maximum));
    }

    #[test]
    fn counting_is_exact(spec in instance(16), pairs in prop::collection::vec((0usize..16, 0usize..16), 0..60)) {
        let n = spec.n();
        let mut o = with_counting(spec.oracle());
        let mut issued = 0u64;
        for (a, b) in pairs {
            let _ = o.compare(ElementId::from(a % n), ElementId::from(b % n));
            issued += 1;
        }
        prop_assert_eq!(o.count(), issued);
    }

    #[test]
    fn caching_forwards_distinct_pairs(spec in instance(16), pairs in prop::collection::vec((0usize..16, 0usize..16), 0..80)) {
        let n = spec.n();
        let mut o = with_caching(with_counting(spec.oracle()));
        let mut distinct = std::collections::HashSet::new();
        for (a, b) in pairs {
            let (a, b) = (a % n, b % n);
            if a == b { continue; }
            o.compare(ElementId::from(a), ElementId::from(b)).unwrap();
            distinct.insert((a.min(b), a.max(b)));
        }
        prop_assert_eq!(o.inner().count(), distinct.len() as u64);
    }

    #[test]
    fn budget_answers_exactly_limit(spec in instance(16), limit in 0u64..40) {
        let n = spec.n();
        let mut o = with_budget(spec.oracle(), spec.k(), QueryBudget::Limited(limit));
        let mut answered = 0;
        let mut i = 0usize;
        loop {
            let (a, b) = (i % n, (i + 1) % n);
            match o.compare(ElementId::from(a), ElementId::from(b)) {
                Ok(_) => answered += 1,
                Err(OracleError::BudgetExhausted { transcript, .. }) => {
                    prop_assert_eq!(transcript.len() as u64, limit);
                    break;
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
            i += 1;
        }
        prop_assert_eq!(answered, limit);
    }

    #[test]
    fn transcript_text_round_trip(spec in instance(16), pairs in prop::collection::vec((0usize..16, 1usize..16), 0..40)) {
        let n = spec.n();
        let mut o = with_budget(spec.oracle(), spec.k(), QueryBudget::Unlimited);
        for (a, d) in pairs {
            let a = a % n;
            let b = (a + 1 + d % (n - 1)) % n;
            o.compare(ElementId::from(a), ElementId::from(b)).unwrap();
        }
        let t = o.transcript().clone();
        prop_assert_eq!(t.to_text().parse::<Transcript>().unwrap(), t.clone());
        prop_assert_eq!(t.first_mismatch(&mut spec.oracle()).unwrap(), None);
    }

    #[test]
    fn det_count_is_oblivious(spec in instance(48)) {
        let (n, k) = (spec.n(), spec.k());
        prop_assume!(n >= 2 * k + 2);
        let mut o = with_counting(spec.oracle());
        let out = det_max_find(&mut o, n, k).unwrap();
        prop_assert_eq!(o.count(), det_query_count(n, k));
        prop_assert_eq!(out.len(), 2 * k + 1);
        prop_assert!(out.contains(spec.maximum()));
    }

    #[test]
    fn adversary_defeats_arbitrary_under_budget_queries(
        n in 6usize..20,
        k in 1usize..3,
        pairs in prop::collection::vec((0usize..20, 0usize..20), 0..60),
        out_seed: u64,
    ) {
        prop_assume!(n > 2 * k + 1);
        let bound = lower_bound(n, k);
        let mut adv = Adversary::new(n, k);
        for (a, b) in pairs.into_iter().take(bound as usize - 1) {
            let (a, b) = (a % n, b % n);
            if a != b {
                adv.answer(ElementId::from(a), ElementId::from(b)).unwrap();
            }
        }
        let out: CandidateSet = corrupt_max::algorithms::random_subset(n, k, out_seed);
        let CounterexampleOutcome::Found(cx) = construct_counterexample(&adv, &out).unwrap() else {
            return Err(TestCaseError::fail("no witness under budget"));
        };
        prop_assert!(!out.contains(ground_truth(&cx.second_instance).maximum));
        prop_assert_eq!(cx.transcript.first_mismatch(&mut cx.second_instance.oracle()).unwrap(), None);
        prop_assert_eq!(cx.transcript.first_mismatch(&mut cx.first_instance.oracle()).unwrap(), None);
    }
}
