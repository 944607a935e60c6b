#![allow(dead_code)]

use ssclass::harness::{gen_instance, CostDistribution, GeneratorSpec};
use ssclass::strategies::execute;
use ssclass::{Instance, Policy, Realization};

/// Seeded sweep member: `n` and `B` drawn from the given ranges, costs
/// alternating between uniform [1, 10] and log-uniform [0.01, 100].
pub fn sweep_instance(seed: u64, id: u64, n_range: (usize, usize), max_blocks: usize) -> Instance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let n = rng.gen_range(n_range.0..=n_range.1);
    let blocks = rng.gen_range(2..=max_blocks.min(n + 1));
    let mut spec = GeneratorSpec::new(n, blocks, rng.gen());
    if id % 2 == 1 {
        spec.cost_dist = CostDistribution::LogUniform;
        spec.cost_lo = 0.01;
        spec.cost_hi = 100.0;
    }
    gen_instance(&spec).expect("sweep specs are feasible")
}

pub fn realizations(n: usize) -> impl Iterator<Item = Realization> {
    (0..1u64 << n).map(move |m| Realization::from_mask(m, n))
}

/// `Σ_a p(a) C(S, a)` by running the policy on every realization,
/// optionally restricted to block `j`.
pub fn enumerate_cost<P: Policy + ?Sized>(policy: &P, block: Option<usize>) -> f64 {
    let i = policy.instance();
    realizations(i.n())
        .filter(|a| block.is_none_or(|j| i.classify(a) == j))
        .map(|a| i.realization_prob(&a) * execute(policy, &a).cost())
        .sum()
}
