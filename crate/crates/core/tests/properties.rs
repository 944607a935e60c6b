mod common;

use proptest::prelude::*;

use common::{enumerate_cost, realizations};
use ssclass::evaluators::{
    exact_eval_cost, exact_policy_cost, exact_verification_cost, opt_adaptive_eval,
    opt_adaptive_verification, state_space_cost,
};
use ssclass::sequences::{
    head_comparison_steps, pi_dprime_prefix, pi_prefix, pi_prime_prefix, SequenceTriple,
};
use ssclass::strategies::{execute, rr3_schedule, Decision};
use ssclass::{
    rr2_permutation, rr3_permutation, vj_policy, vprime_policy, Instance, NonAdaptive,
    Permutation, Policy, Realization, StopRule, TestState,
};

/// Instances with `n` in `1..=max_n`, random cut points, and some repeated
/// costs so ties are exercised.
fn instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![Just(1.0), Just(2.0), 0.05f64..20.0], n),
            prop::collection::vec(0.01f64..0.99, n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(costs, probs, cuts)| {
                let mut alphas = vec![0];
                alphas.extend((1..=n).filter(|&k| cuts[k - 1]));
                alphas.push(n + 1);
                Instance::new(costs, probs, alphas).unwrap()
            })
    })
}

fn is_perm(order: &[usize], n: usize) -> bool {
    Permutation::new(order.to_vec(), n).is_ok()
}

/// Optimal adaptive cost by plain recursion over explicit partial
/// assignments, with determination read off the set of reachable blocks.
fn naive_opt(i: &Instance, known: &mut Vec<Option<bool>>, block: Option<usize>) -> f64 {
    let ones = known.iter().filter(|k| **k == Some(true)).count();
    let free = known.iter().filter(|k| k.is_none()).count();
    let reachable: Vec<usize> = (ones..=ones + free).map(|s| i.block_of(s).unwrap()).collect();
    let weight = match block {
        None => {
            if reachable.iter().all(|&b| b == reachable[0]) {
                return 0.0;
            }
            1.0
        }
        Some(j) => {
            let (lo, hi) = i.block_range(j).unwrap();
            // Certified: every completion stays in block j.
            if ones >= lo && ones + free <= hi {
                return 0.0;
            }
            let free_probs: Vec<f64> = (0..i.n())
                .filter(|&k| known[k].is_none())
                .map(|k| i.prob(k))
                .collect();
            let mut mass = 0.0;
            for m in 0..1u64 << free {
                let extra = m.count_ones() as usize;
                if (lo..=hi).contains(&(ones + extra)) {
                    mass += free_probs
                        .iter()
                        .enumerate()
                        .map(|(b, &p)| if m >> b & 1 == 1 { p } else { 1.0 - p })
                        .product::<f64>();
                }
            }
            if mass == 0.0 {
                return 0.0;
            }
            mass
        }
    };
    let mut best = f64::INFINITY;
    for k in 0..i.n() {
        if known[k].is_some() {
            continue;
        }
        known[k] = Some(true);
        let one = naive_opt(i, known, block);
        known[k] = Some(false);
        let zero = naive_opt(i, known, block);
        known[k] = None;
        best = best.min(weight * i.cost(k) + i.prob(k) * one + (1.0 - i.prob(k)) * zero);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stopping_rules_agree_and_are_monotone(i in instance(12), ones in 0usize..13, zeros in 0usize..13) {
        let n = i.n();
        prop_assume!(ones + zeros <= n);
        let determined = i.is_determined_counts(ones, zeros);
        prop_assert_eq!(determined, i.is_determined_by_thresholds(ones, zeros));
        if determined && ones + zeros < n {
            prop_assert!(i.is_determined_counts(ones + 1, zeros));
            prop_assert!(i.is_determined_counts(ones, zeros + 1));
        }
        if ones + zeros == n {
            prop_assert!(determined);
        }
    }

    #[test]
    fn blocks_partition_the_scores(i in instance(15)) {
        let blocks: Vec<usize> = (0..=i.n()).map(|s| i.block_of(s).unwrap()).collect();
        prop_assert_eq!(blocks[0], 1);
        prop_assert_eq!(*blocks.last().unwrap(), i.num_blocks());
        for w in blocks.windows(2) {
            prop_assert!(w[1] == w[0] || w[1] == w[0] + 1);
        }
    }

    #[test]
    fn realization_probabilities_sum_to_one(i in instance(12)) {
        let total: f64 = realizations(i.n()).map(|a| i.realization_prob(&a)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequences_are_sorted_permutations(i in instance(40)) {
        let s = SequenceTriple::build(&i);
        let c = i.costs();
        let p = i.probs();
        let keys: [Box<dyn Fn(usize) -> f64>; 3] = [
            Box::new(|k| c[k] / (1.0 - p[k])),
            Box::new(|k| c[k] / p[k]),
            Box::new(|k| c[k]),
        ];
        for (seq, key) in [&s.p0, &s.p1, &s.pc].into_iter().zip(keys.iter()) {
            prop_assert!(is_perm(seq.as_slice(), i.n()));
            for w in seq.as_slice().windows(2) {
                let (a, b) = (key(w[0]), key(w[1]));
                prop_assert!(a < b || (a == b && w[0] < w[1]));
            }
        }
    }

    #[test]
    fn prefixes_are_nested_and_bounded(i in instance(40)) {
        let n = i.n();
        let cost = |set: &[usize]| set.iter().map(|&k| i.cost(k)).sum::<f64>();
        for k in 0..n {
            for f in [pi_prefix, pi_prime_prefix, pi_dprime_prefix] {
                let small = f(&i, k).unwrap();
                let large = f(&i, k + 1).unwrap();
                prop_assert_eq!(small.as_slice(), &large[..k]);
            }
        }
        for k in 0..=n {
            let pi = cost(&pi_prefix(&i, k).unwrap());
            let pi1 = cost(&pi_prime_prefix(&i, k).unwrap());
            let pi2 = cost(&pi_dprime_prefix(&i, k).unwrap());
            prop_assert!(pi1 <= 2.0 * pi + 1e-12);
            prop_assert!(pi2 <= 2.0 * pi1 + 1e-12);
            prop_assert!(pi2 <= 4.0 * pi + 1e-12);
        }
        prop_assert!(pi_prefix(&i, n + 1).is_err());
    }

    #[test]
    fn chosen_head_is_at_most_twice_the_cheapest_remaining(i in instance(40)) {
        let mut removed = vec![false; i.n()];
        for step in head_comparison_steps(&i) {
            let cheapest = (0..i.n())
                .filter(|&k| !removed[k])
                .map(|k| i.cost(k))
                .fold(f64::INFINITY, f64::min);
            let head = i.cost(step.p0_head).min(i.cost(step.p1_head));
            prop_assert!(head <= 2.0 * cheapest * (1.0 + 1e-12));
            prop_assert_eq!(i.cost(step.chosen), head);
            removed[step.chosen] = true;
        }
    }

    #[test]
    fn round_robin_orders_are_permutations(i in instance(40)) {
        prop_assert!(is_perm(rr3_permutation(&i).as_slice(), i.n()));
        prop_assert!(is_perm(rr2_permutation(&i).as_slice(), i.n()));
    }

    #[test]
    fn three_way_spend_is_bounded_by_the_cost_lane(i in instance(40)) {
        let mut total = 0.0;
        for pick in rr3_schedule(&i) {
            let cost_lane = pick.accumulators[2] + i.cost(pick.heads[2]);
            for &k in &pick.accumulators[..2] {
                prop_assert!(k <= cost_lane * (1.0 + 1e-12));
            }
            total += i.cost(pick.test);
            prop_assert!(total <= 3.0 * cost_lane * (1.0 + 1e-12));
        }
    }

    #[test]
    fn decisions_depend_only_on_the_state_summary(
        i in instance(8),
        order_seed in any::<u64>(),
        outcomes in prop::collection::vec(any::<bool>(), 8),
    ) {
        let n = i.n();
        let tested = n / 2;
        let perm = ssclass::strategies::random_permutation(n, order_seed);
        let history: Vec<(usize, bool)> = perm.as_slice()[..tested]
            .iter()
            .zip(&outcomes)
            .map(|(&k, &b)| (k, b))
            .collect();
        // Same tested set and counts, outcomes assigned in reverse.
        let flipped: Vec<(usize, bool)> = history
            .iter()
            .zip(history.iter().rev())
            .map(|(&(k, _), &(_, b))| (k, b))
            .collect();
        let state = |h: &[(usize, bool)]| {
            let mut s = TestState::new(n);
            for &(k, b) in h {
                s.record(k, b);
            }
            s
        };
        let (s1, s2) = (state(&history), state(&flipped));
        for j in 1..=i.num_blocks() {
            let vj = vj_policy(&i, j).unwrap();
            let vp = vprime_policy(&i, j).unwrap();
            prop_assert_eq!(vj.decide(&s1), vj.decide(&s2));
            prop_assert_eq!(vp.decide(&s1), vp.decide(&s2));
            if let Decision::Test(k) = vj.decide(&s1) {
                prop_assert!(!s1.is_tested(k));
            }
        }
    }

    #[test]
    fn verifier_traces_are_well_formed(i in instance(8)) {
        for j in 1..=i.num_blocks() {
            let t = i.thresholds(j).unwrap();
            let vj = vj_policy(&i, j).unwrap();
            for a in realizations(i.n()).filter(|a| i.classify(a) == j) {
                let trace = execute(&vj, &a);
                prop_assert!(trace.steps.len() >= t.certificate_len());
                let mut seen = vec![false; i.n()];
                let mut last = 0.0;
                for s in &trace.steps {
                    prop_assert!(!std::mem::replace(&mut seen[s.index], true));
                    prop_assert!(s.cumulative_cost > last);
                    last = s.cumulative_cost;
                }
            }
        }
    }

    #[test]
    fn block_costs_decompose_evaluation_cost(i in instance(10), seed in any::<u64>()) {
        let perm = ssclass::strategies::random_permutation(i.n(), seed);
        let policy = NonAdaptive::new(&i, "p", perm.clone(), StopRule::Evaluate).unwrap();
        let total = exact_eval_cost(&perm, &i).unwrap();
        let split: f64 = (1..=i.num_blocks())
            .map(|j| exact_verification_cost(&policy, j).unwrap())
            .sum();
        prop_assert!((total - split).abs() < 1e-9);
        prop_assert!((total - enumerate_cost(&policy, None)).abs() < 1e-9);
    }

    #[test]
    fn optimum_is_sandwiched(i in instance(8), seed in any::<u64>()) {
        let opt = opt_adaptive_eval(&i, 20).unwrap();
        let perm = ssclass::strategies::random_permutation(i.n(), seed);
        prop_assert!(opt.value() <= exact_eval_cost(&perm, &i).unwrap() + 1e-9);
        for j in 1..=i.num_blocks() {
            let oj = opt_adaptive_verification(&i, j, 14).unwrap().value();
            let replay = state_space_cost(&opt, Some(j), 20).unwrap();
            prop_assert!(oj <= replay + 1e-9);
            prop_assert!(replay <= opt.value() + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn subset_dp_matches_naive_recursion(i in instance(5)) {
        let n = i.n();
        let opt = opt_adaptive_eval(&i, 20).unwrap().value();
        prop_assert!((opt - naive_opt(&i, &mut vec![None; n], None)).abs() < 1e-9);
        for j in 1..=i.num_blocks() {
            let oj = opt_adaptive_verification(&i, j, 14).unwrap().value();
            prop_assert!((oj - naive_opt(&i, &mut vec![None; n], Some(j))).abs() < 1e-9);
        }
    }

    #[test]
    fn structured_and_state_space_evaluators_agree(i in instance(9)) {
        for j in 1..=i.num_blocks() {
            for policy in [vj_policy(&i, j).unwrap(), vprime_policy(&i, j).unwrap()] {
                let a = exact_policy_cost(&policy, Some(j)).unwrap();
                let b = state_space_cost(&policy, Some(j), 20).unwrap();
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn single_block_instances_cost_nothing() {
    let i = Instance::new(vec![1.0, 3.0], vec![0.2, 0.7], vec![0, 3]).unwrap();
    assert_eq!(opt_adaptive_eval(&i, 20).unwrap().value(), 0.0);
    assert_eq!(opt_adaptive_verification(&i, 1, 14).unwrap().value(), 0.0);
    let v = vj_policy(&i, 1).unwrap();
    assert_eq!(execute(&v, &Realization::new(vec![true, false])).cost(), 0.0);
}
