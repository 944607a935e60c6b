use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostDistribution {
    Uniform,
    LogUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalScheme {
    /// `B - 1` distinct interior cut points drawn uniformly from `1..=n`.
    Random,
    /// Cut points at `floor((j - 1)(n + 1) / B)`.
    Equal,
}

/// Recipe for one random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub blocks: usize,
    pub cost_dist: CostDistribution,
    pub cost_lo: f64,
    pub cost_hi: f64,
    /// Probabilities are drawn from `[eps, 1 - eps]`.
    pub prob_eps: f64,
    pub intervals: IntervalScheme,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(n: usize, blocks: usize, seed: u64) -> Self {
        Self {
            n,
            blocks,
            cost_dist: CostDistribution::Uniform,
            cost_lo: 1.0,
            cost_hi: 10.0,
            prob_eps: 0.01,
            intervals: IntervalScheme::Random,
            seed,
        }
    }

    fn check(&self) -> Result<(), Error> {
        let fail = |msg: String| Err(Error::InfeasibleSpec(msg));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if self.blocks == 0 || self.blocks > self.n + 1 {
            return fail(format!(
                "{} blocks need {} interior cut points in 1..={}",
                self.blocks,
                self.blocks.saturating_sub(1),
                self.n
            ));
        }
        if !(self.cost_lo > 0.0 && self.cost_lo <= self.cost_hi && self.cost_hi.is_finite()) {
            return fail(format!(
                "cost range [{}, {}] must be positive and ordered",
                self.cost_lo, self.cost_hi
            ));
        }
        if !(self.prob_eps > 0.0 && self.prob_eps < 0.5) {
            return fail(format!("prob_eps {} must lie in (0, 0.5)", self.prob_eps));
        }
        Ok(())
    }
}

pub fn gen_instance(spec: &GeneratorSpec) -> Result<Instance, Error> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;

    let costs = (0..n)
        .map(|_| match spec.cost_dist {
            CostDistribution::Uniform => rng.gen_range(spec.cost_lo..=spec.cost_hi),
            CostDistribution::LogUniform => rng
                .gen_range(spec.cost_lo.ln()..=spec.cost_hi.ln())
                .exp()
                .clamp(spec.cost_lo, spec.cost_hi),
        })
        .collect();
    let probs = (0..n)
        .map(|_| rng.gen_range(spec.prob_eps..=1.0 - spec.prob_eps))
        .collect();

    let mut interior: Vec<usize> = match spec.intervals {
        IntervalScheme::Random => rand::seq::index::sample(&mut rng, n, spec.blocks - 1)
            .into_iter()
            .map(|k| k + 1)
            .collect(),
        IntervalScheme::Equal => (2..=spec.blocks)
            .map(|j| (j - 1) * (n + 1) / spec.blocks)
            .collect(),
    };
    interior.sort_unstable();
    let mut alphas = Vec::with_capacity(spec.blocks + 1);
    alphas.push(0);
    alphas.extend(interior);
    alphas.push(n + 1);

    Instance::new(costs, probs, alphas)
}
