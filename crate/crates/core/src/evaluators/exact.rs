//! Exact expected costs without enumerating realizations.
//!
//! Along a fixed test order the state is summarized by the one-count, so a
//! forward pass over `(step, ones)` carries the probability of every
//! still-running state. Restricting the cost to block `j` multiplies each
//! step's charge by the chance that the untested suffix lands the final
//! score in block `j`, read off a suffix Poisson-binomial table.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::model::{Instance, TestState};
use crate::sequences::Permutation;
use crate::strategies::{CountStructure, NonAdaptive, Policy, StopRule};

use super::poisson::suffix_distributions;

/// Walks `order[..steps]` starting from `mass` (indexed by one-count) with
/// `tested_before` tests already run. `order` must list every untested
/// variable. Returns the accrued cost and the still-running mass.
fn sweep(
    instance: &Instance,
    order: &[usize],
    steps: usize,
    mut mass: Vec<f64>,
    tested_before: usize,
    stop: StopRule,
    block: Option<(usize, usize)>,
) -> (f64, Vec<f64>) {
    debug_assert_eq!(tested_before + order.len(), instance.n());
    let suffix = block.map(|_| suffix_distributions(instance, order));
    let mut cost = 0.0;
    for (t, &test) in order.iter().enumerate().take(steps) {
        let tested = tested_before + t;
        let mut next = vec![0.0; mass.len()];
        let p = instance.prob(test);
        let c = instance.cost(test);
        for ones in 0..=tested.min(mass.len() - 1) {
            let m = mass[ones];
            if m == 0.0 || stop.holds(instance, ones, tested - ones) {
                continue;
            }
            let weight = match (block, &suffix) {
                (Some((lo, hi)), Some(suffix)) => {
                    let rest = &suffix[t];
                    if ones > hi {
                        0.0
                    } else {
                        rest.mass_between(lo.saturating_sub(ones), hi - ones)
                    }
                }
                _ => 1.0,
            };
            cost += c * m * weight;
            next[ones] += m * (1.0 - p);
            next[ones + 1] += m * p;
        }
        mass = next;
    }
    // Mass that halted on the final step is dropped as well.
    let tested = tested_before + steps.min(order.len());
    for (ones, m) in mass.iter_mut().enumerate() {
        if ones > tested || stop.holds(instance, ones, tested - ones) {
            *m = 0.0;
        }
    }
    (cost, mass)
}

fn complement(n: usize, used: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &i in used {
        seen[i] = true;
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

fn is_permutation_of_rest(n: usize, first: &[usize], rest: &[usize]) -> bool {
    let mut seen = vec![false; n];
    first.len() + rest.len() == n
        && first
            .iter()
            .chain(rest)
            .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

/// Expected cost of a count-structured strategy, optionally charging only
/// realizations in block `block`.
pub fn structured_cost(
    instance: &Instance,
    structure: &CountStructure,
    stop: StopRule,
    block: Option<usize>,
) -> Result<f64, Error> {
    let n = instance.n();
    let range = block.map(|j| instance.block_range(j)).transpose()?;
    let shape_error = || Error::UnsupportedStrategyShape("malformed count structure".into());

    let mut head = structure.phase1.clone();
    let rest = complement(n, &head);
    if !is_permutation_of_rest(n, &structure.phase1, &rest) {
        return Err(shape_error());
    }
    let phase1_len = head.len();
    head.extend_from_slice(&rest);

    let mut start = vec![0.0; n + 1];
    start[0] = 1.0;
    let (mut cost, end) = sweep(instance, &head, phase1_len, start, 0, stop, range);
    if phase1_len == n || end.iter().all(|&m| m == 0.0) {
        return Ok(cost);
    }

    let (mut short_zeros, mut short_ones) = (end.clone(), end);
    for ones in 0..=n {
        if ones >= structure.pivot_ones {
            short_ones[ones] = 0.0;
        } else {
            short_zeros[ones] = 0.0;
        }
    }
    for (mass, branch) in [
        (short_zeros, &structure.short_of_zeros),
        (short_ones, &structure.short_of_ones),
    ] {
        if mass.iter().all(|&m| m == 0.0) {
            continue;
        }
        if !is_permutation_of_rest(n, &structure.phase1, branch) {
            return Err(shape_error());
        }
        cost += sweep(instance, branch, branch.len(), mass, phase1_len, stop, range).0;
    }
    Ok(cost)
}

/// `E(S)` for a permutation run with the evaluation stop.
pub fn exact_eval_cost(perm: &Permutation, instance: &Instance) -> Result<f64, Error> {
    let policy = NonAdaptive::new(instance, "perm", perm.clone(), StopRule::Evaluate)?;
    exact_policy_cost(&policy, None)
}

/// Expected cost of `policy` under its own stopping rule, over all
/// realizations (`block = None`) or over block `block` only.
pub fn exact_policy_cost<P: Policy + ?Sized>(policy: &P, block: Option<usize>) -> Result<f64, Error> {
    let structure = policy
        .count_structure()
        .ok_or_else(|| Error::UnsupportedStrategyShape(policy.label()))?;
    structured_cost(policy.instance(), &structure, policy.stop_rule(), block)
}

/// `E_j(S)`: cost summed over realizations in block `j`, weighted by their
/// probabilities (not normalized by the block's probability).
pub fn exact_verification_cost<P: Policy + ?Sized>(policy: &P, j: usize) -> Result<f64, Error> {
    policy.instance().check_block(j)?;
    exact_policy_cost(policy, Some(j))
}

/// Exact expected cost of an arbitrary policy by forward propagation over
/// `(tested set, ones)` states. Exponential in `n`; `limit` caps it.
pub fn state_space_cost<P: Policy + ?Sized>(
    policy: &P,
    block: Option<usize>,
    limit: usize,
) -> Result<f64, Error> {
    let instance = policy.instance();
    let n = instance.n();
    if n > limit || n > 63 {
        return Err(Error::InstanceTooLarge { n, limit: limit.min(63) });
    }
    if let Some(j) = block {
        instance.check_block(j)?;
    }
    let mut layer: BTreeMap<(u64, usize), f64> = BTreeMap::new();
    layer.insert((0, 0), 1.0);
    let mut cost = 0.0;
    while !layer.is_empty() {
        let mut next: BTreeMap<(u64, usize), f64> = BTreeMap::new();
        for (&(mask, ones), &reach) in &layer {
            let state = TestState::from_mask(n, mask, ones);
            let test = match policy.decide(&state) {
                crate::strategies::Decision::Test(i) => i,
                crate::strategies::Decision::Stop => continue,
            };
            let weight = match block {
                Some(j) => super::oracle::conditional_block_mass(instance, mask, ones, j),
                None => 1.0,
            };
            cost += reach * instance.cost(test) * weight;
            let p = instance.prob(test);
            let grown = mask | 1 << test;
            *next.entry((grown, ones + 1)).or_insert(0.0) += reach * p;
            *next.entry((grown, ones)).or_insert(0.0) += reach * (1.0 - p);
        }
        layer = next;
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Realization;
    use crate::strategies::{execute, vj_policy, StrategyKind};

    fn inst(costs: &[f64], probs: &[f64], alphas: &[usize]) -> Instance {
        Instance::new(costs.to_vec(), probs.to_vec(), alphas.to_vec()).unwrap()
    }

    fn enumerate<P: Policy>(policy: &P, block: Option<usize>) -> f64 {
        let i = policy.instance();
        (0..1u64 << i.n())
            .map(|m| Realization::from_mask(m, i.n()))
            .filter(|a| block.is_none_or(|j| i.classify(a) == j))
            .map(|a| i.realization_prob(&a) * execute(policy, &a).cost())
            .sum()
    }

    #[test]
    fn single_test_always_paid() {
        let i = inst(&[2.5], &[0.3], &[0, 1, 2]);
        let e = exact_eval_cost(&Permutation::identity(1), &i).unwrap();
        assert!((e - 2.5).abs() < 1e-12);
    }

    #[test]
    fn or_instance_examples() {
        let i = inst(&[1.0, 1.0], &[0.5, 0.5], &[0, 1, 3]);
        let perm = Permutation::identity(2);
        assert!((exact_eval_cost(&perm, &i).unwrap() - 1.5).abs() < 1e-12);
        let i = inst(&[1.0, 1.0], &[0.9, 0.5], &[0, 1, 3]);
        assert!((exact_eval_cost(&perm, &i).unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn verification_examples() {
        let i = inst(&[1.0, 1.0], &[0.5, 0.5], &[0, 1, 3]);
        let policy = NonAdaptive::new(&i, "id", Permutation::identity(2), StopRule::Evaluate).unwrap();
        assert!((exact_verification_cost(&policy, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((exact_verification_cost(&policy, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            exact_verification_cost(&policy, 3),
            Err(Error::BlockOutOfRange { .. })
        ));
    }

    #[test]
    fn single_block_costs_nothing() {
        let i = inst(&[1.0, 2.0], &[0.5, 0.5], &[0, 3]);
        let policy = NonAdaptive::new(&i, "id", Permutation::identity(2), StopRule::Evaluate).unwrap();
        assert_eq!(exact_policy_cost(&policy, None).unwrap(), 0.0);
        assert_eq!(exact_verification_cost(&policy, 1).unwrap(), 0.0);
    }

    #[test]
    fn verifier_matches_enumeration() {
        let i = inst(
            &[1.5, 0.4, 2.2, 0.9, 3.1],
            &[0.3, 0.8, 0.55, 0.1, 0.65],
            &[0, 2, 4, 6],
        );
        for j in 1..=3 {
            let v = vj_policy(&i, j).unwrap();
            let exact = exact_verification_cost(&v, j).unwrap();
            assert!((exact - enumerate(&v, Some(j))).abs() < 1e-12, "block {j}");
            let states = state_space_cost(&v, Some(j), 20).unwrap();
            assert!((exact - states).abs() < 1e-12, "block {j}");
        }
    }

    #[test]
    fn block_costs_sum_to_evaluation_cost() {
        let i = inst(&[1.0, 2.0, 0.5, 1.7], &[0.2, 0.9, 0.5, 0.4], &[0, 1, 3, 5]);
        let policy = StrategyKind::Rr3.evaluation_policy(&i, 0).unwrap();
        let total = exact_policy_cost(&policy, None).unwrap();
        let split: f64 = (1..=3).map(|j| exact_verification_cost(&policy, j).unwrap()).sum();
        assert!((total - split).abs() < 1e-12);
        assert!((total - enumerate(&policy, None)).abs() < 1e-12);
    }

    struct Opaque<'a>(&'a Instance);

    impl Policy for Opaque<'_> {
        fn label(&self) -> String {
            "opaque".into()
        }
        fn instance(&self) -> &Instance {
            self.0
        }
        fn stop_rule(&self) -> StopRule {
            StopRule::Evaluate
        }
        fn choose(&self, state: &TestState) -> Option<usize> {
            // Reverse order once a one has been seen.
            let n = self.0.n();
            if state.ones() > 0 {
                (0..n).rev().find(|&i| !state.is_tested(i))
            } else {
                (0..n).find(|&i| !state.is_tested(i))
            }
        }
    }

    #[test]
    fn opaque_policies_need_the_state_space_route() {
        let i = inst(&[1.0, 2.0, 3.0], &[0.4, 0.5, 0.6], &[0, 2, 4]);
        let policy = Opaque(&i);
        assert!(matches!(
            exact_policy_cost(&policy, None),
            Err(Error::UnsupportedStrategyShape(_))
        ));
        let states = state_space_cost(&policy, None, 10).unwrap();
        assert!((states - enumerate(&policy, None)).abs() < 1e-12);
        assert!(matches!(
            state_space_cost(&policy, None, 2),
            Err(Error::InstanceTooLarge { .. })
        ));
    }
}
