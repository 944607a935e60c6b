//! Brute-force optimal adaptive strategies by subset dynamic programming.
//!
//! For a symmetric score function the future of any decision tree depends
//! only on which tests were run and how many came back positive, so the
//! optimum is a recursion over `(mask, ones)`. Entries are laid out mask by
//! mask with `popcount(mask) + 1` slots each.

use crate::error::Error;
use crate::model::{Instance, TestState};
use crate::strategies::{Policy, StopRule};

use super::poisson::OnesDistribution;

pub const DEFAULT_EVAL_LIMIT: usize = 20;
pub const DEFAULT_VERIFICATION_LIMIT: usize = 14;

const NO_TEST: u8 = u8::MAX;

fn untested(n: usize, mask: u64) -> impl Iterator<Item = usize> {
    (0..n).filter(move |&i| mask >> i & 1 == 0)
}

/// `P(final score in block j | mask tested, ones seen)`.
pub fn conditional_block_mass(instance: &Instance, mask: u64, ones: usize, j: usize) -> f64 {
    let n = instance.n();
    let rest = n - mask.count_ones() as usize;
    if !instance.block_reachable(j, ones, rest) {
        return 0.0;
    }
    let (lo, hi) = instance.block_range(j).expect("reachable block exists");
    OnesDistribution::from_probs(untested(n, mask).map(|i| instance.prob(i)))
        .mass_between(lo.saturating_sub(ones), hi - ones)
}

#[derive(Debug, Clone)]
struct StateTable {
    offsets: Vec<usize>,
    values: Vec<f64>,
    choices: Vec<u8>,
}

impl StateTable {
    fn slot(&self, mask: u64, ones: usize) -> usize {
        self.offsets[mask as usize] + ones
    }
}

fn check_limit(instance: &Instance, limit: usize) -> Result<(), Error> {
    // Choices are stored as u8 and masks as u64.
    let limit = limit.min(32);
    if instance.n() > limit {
        Err(Error::InstanceTooLarge {
            n: instance.n(),
            limit,
        })
    } else {
        Ok(())
    }
}

/// Solves `V(mask, ones) = min_i weight * c_i + p_i V(+1) + (1 - p_i) V(+0)`
/// with `V = 0` on terminal states. `weights(mask)` gives the per-`ones`
/// charge factor, or `None` for a factor of one.
fn solve(
    instance: &Instance,
    terminal: impl Fn(u64, usize) -> bool,
    weights: impl Fn(u64) -> Option<Vec<f64>>,
) -> StateTable {
    let n = instance.n();
    let masks = 1usize << n;
    let mut offsets = Vec::with_capacity(masks + 1);
    let mut total = 0;
    for mask in 0..masks {
        offsets.push(total);
        total += mask.count_ones() as usize + 1;
    }
    offsets.push(total);
    let mut table = StateTable {
        offsets,
        values: vec![0.0; total],
        choices: vec![NO_TEST; total],
    };

    // Supersets are numerically larger, so a descending sweep sees every
    // successor before its predecessors.
    for mask in (0..masks as u64).rev() {
        let pop = mask.count_ones() as usize;
        let w = weights(mask);
        for ones in 0..=pop {
            if terminal(mask, ones) {
                continue;
            }
            let factor = w.as_ref().map_or(1.0, |w| w[ones]);
            let mut best = f64::INFINITY;
            let mut best_test = NO_TEST;
            for i in untested(n, mask) {
                let grown = mask | 1 << i;
                let p = instance.prob(i);
                let value = factor * instance.cost(i)
                    + p * table.values[table.slot(grown, ones + 1)]
                    + (1.0 - p) * table.values[table.slot(grown, ones)];
                if value < best {
                    best = value;
                    best_test = i as u8;
                }
            }
            let slot = table.slot(mask, ones);
            if best_test != NO_TEST {
                table.values[slot] = best;
                table.choices[slot] = best_test;
            }
        }
    }
    table
}

/// The optimal adaptive strategy found by the subset DP, usable as a policy.
#[derive(Debug, Clone)]
pub struct OptimalPolicy<'a> {
    instance: &'a Instance,
    table: StateTable,
    stop: StopRule,
    label: String,
}

impl OptimalPolicy<'_> {
    /// Optimal expected cost from the empty state.
    pub fn value(&self) -> f64 {
        self.table.values[0]
    }

    /// Optimal cost-to-go from a state.
    pub fn value_at(&self, mask: u64, ones: usize) -> f64 {
        self.table.values[self.table.slot(mask, ones)]
    }
}

impl Policy for OptimalPolicy<'_> {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn instance(&self) -> &Instance {
        self.instance
    }

    fn stop_rule(&self) -> StopRule {
        self.stop
    }

    fn choose(&self, state: &TestState) -> Option<usize> {
        let choice = self.table.choices[self.table.slot(state.tested_mask(), state.ones())];
        (choice != NO_TEST).then_some(choice as usize)
    }
}

/// Optimal adaptive evaluation strategy; `value()` is `E(OPT)`.
pub fn opt_adaptive_eval(instance: &Instance, limit: usize) -> Result<OptimalPolicy<'_>, Error> {
    check_limit(instance, limit)?;
    let table = solve(
        instance,
        |mask, ones| instance.is_determined_counts(ones, mask.count_ones() as usize - ones),
        |_| None,
    );
    Ok(OptimalPolicy {
        instance,
        table,
        stop: StopRule::Evaluate,
        label: "opt".into(),
    })
}

/// Optimal adaptive verifier for block `j`; `value()` is `E_j(OPT_j)`.
///
/// States from which block `j` is unreachable are terminal: no cost is
/// charged outside the block.
pub fn opt_adaptive_verification(
    instance: &Instance,
    j: usize,
    limit: usize,
) -> Result<OptimalPolicy<'_>, Error> {
    check_limit(instance, limit)?;
    let thresholds = instance.thresholds(j)?;
    let n = instance.n();
    let table = solve(
        instance,
        |mask, ones| {
            let pop = mask.count_ones() as usize;
            thresholds.is_met(ones, pop - ones) || !instance.block_reachable(j, ones, n - pop)
        },
        |mask| {
            let pop = mask.count_ones() as usize;
            let (lo, hi) = instance.block_range(j).expect("checked above");
            let rest = OnesDistribution::from_probs(untested(n, mask).map(|i| instance.prob(i)));
            Some(
                (0..=pop)
                    .map(|ones| {
                        if ones > hi {
                            0.0
                        } else {
                            rest.mass_between(lo.saturating_sub(ones), hi - ones)
                        }
                    })
                    .collect(),
            )
        },
    );
    Ok(OptimalPolicy {
        instance,
        table,
        stop: StopRule::Verify(thresholds),
        label: format!("opt[{j}]"),
    })
}

/// `E_j(OPT_j)` for every block, in block order.
pub fn opt_verification_costs(instance: &Instance, limit: usize) -> Result<Vec<f64>, Error> {
    (1..=instance.num_blocks())
        .map(|j| opt_adaptive_verification(instance, j, limit).map(|p| p.value()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::exact::{exact_eval_cost, exact_verification_cost, state_space_cost};
    use crate::sequences::Permutation;
    use crate::strategies::{vj_policy, NonAdaptive};

    fn inst(costs: &[f64], probs: &[f64], alphas: &[usize]) -> Instance {
        Instance::new(costs.to_vec(), probs.to_vec(), alphas.to_vec()).unwrap()
    }

    #[test]
    fn single_test() {
        let i = inst(&[2.5], &[0.3], &[0, 1, 2]);
        assert!((opt_adaptive_eval(&i, 20).unwrap().value() - 2.5).abs() < 1e-12);
        let v = opt_adaptive_verification(&i, 2, 14).unwrap().value();
        assert!((v - 2.5 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn or_instance_tests_likely_one_first() {
        let i = inst(&[1.0, 1.0], &[0.9, 0.5], &[0, 1, 3]);
        let opt = opt_adaptive_eval(&i, 20).unwrap();
        assert!((opt.value() - 1.1).abs() < 1e-12);
        assert_eq!(opt.choose(&TestState::new(2)), Some(0));
    }

    #[test]
    fn or_instance_verification() {
        let i = inst(&[1.0, 1.0], &[0.5, 0.5], &[0, 1, 3]);
        let v = opt_adaptive_verification(&i, 2, 14).unwrap().value();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimum_bounds_every_permutation_and_verifier() {
        let i = inst(&[1.0, 3.0, 0.5, 2.0], &[0.7, 0.2, 0.5, 0.9], &[0, 2, 3, 5]);
        let opt = opt_adaptive_eval(&i, 20).unwrap().value();
        let orders = [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1], [1, 3, 0, 2]];
        for order in orders {
            let perm = Permutation::new(order.to_vec(), 4).unwrap();
            assert!(opt <= exact_eval_cost(&perm, &i).unwrap() + 1e-12);
        }
        for j in 1..=3 {
            let oj = opt_adaptive_verification(&i, j, 14).unwrap().value();
            let vj = exact_verification_cost(&vj_policy(&i, j).unwrap(), j).unwrap();
            assert!(oj <= vj + 1e-12);
        }
    }

    #[test]
    fn replaying_the_table_reproduces_its_value() {
        let i = inst(&[1.0, 3.0, 0.5, 2.0, 1.2], &[0.7, 0.2, 0.5, 0.9, 0.35], &[0, 2, 4, 6]);
        let opt = opt_adaptive_eval(&i, 20).unwrap();
        let replay = state_space_cost(&opt, None, 20).unwrap();
        assert!((replay - opt.value()).abs() < 1e-12);
        for j in 1..=3 {
            let oj = opt_adaptive_verification(&i, j, 14).unwrap();
            let replay = state_space_cost(&oj, Some(j), 20).unwrap();
            assert!((replay - oj.value()).abs() < 1e-12);
        }
    }

    #[test]
    fn size_and_block_errors() {
        let n = 6;
        let i = inst(&vec![1.0; n], &vec![0.5; n], &[0, 3, n + 1]);
        assert!(matches!(opt_adaptive_eval(&i, 5), Err(Error::InstanceTooLarge { .. })));
        assert!(matches!(
            opt_adaptive_verification(&i, 1, 5),
            Err(Error::InstanceTooLarge { .. })
        ));
        assert!(matches!(
            opt_adaptive_verification(&i, 3, 14),
            Err(Error::BlockOutOfRange { .. })
        ));
    }

    #[test]
    fn conditional_mass_examples() {
        let i = inst(&[1.0, 1.0], &[0.5, 0.5], &[0, 1, 3]);
        assert!((conditional_block_mass(&i, 0, 0, 2) - 0.75).abs() < 1e-15);
        assert!((conditional_block_mass(&i, 1, 0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(conditional_block_mass(&i, 1, 1, 1), 0.0);
        let policy = NonAdaptive::new(&i, "id", Permutation::identity(2), StopRule::Evaluate).unwrap();
        assert!((state_space_cost(&policy, Some(2), 10).unwrap() - 1.0).abs() < 1e-12);
    }
}
