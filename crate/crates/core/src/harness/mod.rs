//! Instance generation, experiment sweeps and bound-certification reports.

pub mod config;
pub mod experiment;
pub mod generator;

pub use config::ExperimentConfig;
pub use experiment::{
    pi_bounds, run_experiment, BenchSummary, PiBounds, Report, ReportRow, WorstRatio, COLUMNS,
};
pub use generator::{gen_instance, CostDistribution, GeneratorSpec, IntervalScheme};

use crate::error::Error;
use crate::evaluators::{
    exact_policy_cost, exact_verification_cost, monte_carlo_cost, opt_adaptive_eval,
    opt_verification_costs, CostReport, Method, DEFAULT_EVAL_LIMIT, DEFAULT_VERIFICATION_LIMIT,
};
use crate::model::Instance;
use crate::strategies::StrategyKind;

/// Relative slack allowed on every approximation-bound comparison.
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Knobs shared by `eval`, `verify` and `bench`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub seed: u64,
    pub trials: u64,
    pub exact_max_n: usize,
    pub oracle_max_n: usize,
    pub oracle: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100_000,
            exact_max_n: DEFAULT_EVAL_LIMIT,
            oracle_max_n: DEFAULT_VERIFICATION_LIMIT,
            oracle: false,
        }
    }
}

/// Sets the Monte-Carlo stream apart from the permutation seed of the
/// random strategy.
const MC_SALT: u64 = 0x6d63_5f74_7269_616c;

/// Costs of one strategy on one instance without oracle values: exact
/// when `n` is within `exact_max_n`, estimated otherwise.
pub fn strategy_costs(
    instance: &Instance,
    kind: StrategyKind,
    options: &EvalOptions,
) -> Result<CostReport, Error> {
    let exact = instance.n() <= options.exact_max_n;
    let (expected_cost, stderr) = match kind.evaluation_policy(instance, options.seed) {
        Some(policy) if exact => (Some(exact_policy_cost(&policy, None)?), None),
        Some(policy) => {
            let est = monte_carlo_cost(&policy, options.trials, options.seed ^ MC_SALT, None);
            (Some(est.mean), Some(est.stderr))
        }
        None => (None, None),
    };
    let block_costs = if exact {
        (1..=instance.num_blocks())
            .map(|j| exact_verification_cost(&*kind.block_policy(instance, j, options.seed)?, j))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    Ok(CostReport {
        strategy: kind.name().to_string(),
        method: if exact { Method::Exact } else { Method::MonteCarlo },
        expected_cost,
        stderr,
        block_costs,
        opt_cost: None,
        opt_block_costs: None,
    })
}

/// `E(OPT)` and every `E_j(OPT_j)`, each present only when enabled and
/// within its size gate.
pub fn oracle_costs(
    instance: &Instance,
    options: &EvalOptions,
) -> Result<(Option<f64>, Option<Vec<f64>>), Error> {
    let n = instance.n();
    let opt = if options.oracle && n <= options.exact_max_n {
        Some(opt_adaptive_eval(instance, options.exact_max_n)?.value())
    } else {
        None
    };
    let opt_blocks = if options.oracle && n <= options.oracle_max_n {
        Some(opt_verification_costs(instance, options.oracle_max_n)?)
    } else {
        None
    };
    Ok((opt, opt_blocks))
}

/// [`strategy_costs`] together with the oracle values.
pub fn evaluate_strategy(
    instance: &Instance,
    kind: StrategyKind,
    options: &EvalOptions,
) -> Result<CostReport, Error> {
    let mut report = strategy_costs(instance, kind, options)?;
    (report.opt_cost, report.opt_block_costs) = oracle_costs(instance, options)?;
    Ok(report)
}

/// `ratio <= bound`, up to [`RATIO_TOLERANCE`].
pub fn within_bound(ratio: f64, bound: f64) -> bool {
    ratio <= bound * (1.0 + RATIO_TOLERANCE)
}
