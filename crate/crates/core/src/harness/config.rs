//! Experiment configuration.
//!
//! The file format is flat TOML: one `key = value` per line, `#` comments,
//! no tables. Every key is optional; see `README.md` for the list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evaluators::{DEFAULT_EVAL_LIMIT, DEFAULT_VERIFICATION_LIMIT};
use crate::strategies::StrategyKind;

use super::generator::{CostDistribution, GeneratorSpec, IntervalScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub blocks_min: usize,
    pub blocks_max: usize,
    pub cost_dist: CostDistribution,
    pub cost_lo: f64,
    pub cost_hi: f64,
    pub prob_eps: f64,
    pub intervals: IntervalScheme,
    pub strategies: Vec<StrategyKind>,
    /// Compute `E(OPT)` and `E_j(OPT_j)` where the size gates allow.
    pub oracle: bool,
    /// Monte-Carlo trials for instances above `exact_max_n`.
    pub trials: u64,
    /// Largest `n` with exact costs and the `E(OPT)` oracle.
    pub exact_max_n: usize,
    /// Largest `n` with the per-block `E_j(OPT_j)` oracle.
    pub oracle_max_n: usize,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 100,
            n_min: 2,
            n_max: 10,
            blocks_min: 2,
            blocks_max: 6,
            cost_dist: CostDistribution::Uniform,
            cost_lo: 1.0,
            cost_hi: 10.0,
            prob_eps: 0.01,
            intervals: IntervalScheme::Random,
            strategies: vec![StrategyKind::Rr3, StrategyKind::Rr2],
            oracle: true,
            trials: 100_000,
            exact_max_n: DEFAULT_EVAL_LIMIT,
            oracle_max_n: DEFAULT_VERIFICATION_LIMIT,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, Error> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn check(&self) -> Result<(), Error> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_min == 0 || self.n_min > self.n_max {
            return fail("need 1 <= n_min <= n_max");
        }
        if self.blocks_min == 0 || self.blocks_min > self.blocks_max {
            return fail("need 1 <= blocks_min <= blocks_max");
        }
        if self.trials == 0 {
            return fail("trials must be positive");
        }
        Ok(())
    }

    /// Generator recipe for sweep member `id`. `n` and `B` are drawn from
    /// the configured ranges, with `B` capped at `n + 1`.
    pub fn instance_spec(&self, id: usize) -> GeneratorSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        let n = rng.gen_range(self.n_min..=self.n_max);
        let hi = self.blocks_max.min(n + 1);
        let lo = self.blocks_min.min(hi);
        let blocks = rng.gen_range(lo..=hi);
        GeneratorSpec {
            n,
            blocks,
            cost_dist: self.cost_dist,
            cost_lo: self.cost_lo,
            cost_hi: self.cost_hi,
            prob_eps: self.prob_eps,
            intervals: self.intervals,
            seed: rng.gen(),
        }
    }

    /// Strategies in report order, without duplicates.
    pub fn strategy_order(&self) -> Vec<StrategyKind> {
        let mut s = self.strategies.clone();
        s.sort();
        s.dedup();
        s
    }
}
