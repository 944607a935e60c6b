//! Expected-cost computation: exact dynamic programs, brute-force optimal
//! oracles and Monte-Carlo estimates.

pub mod exact;
pub mod monte_carlo;
pub mod oracle;
pub mod poisson;

use serde::Serialize;

pub use exact::{
    exact_eval_cost, exact_policy_cost, exact_verification_cost, state_space_cost, structured_cost,
};
pub use monte_carlo::{monte_carlo_cost, sample_realization, McEstimate};
pub use oracle::{
    conditional_block_mass, opt_adaptive_eval, opt_adaptive_verification, opt_verification_costs,
    OptimalPolicy, DEFAULT_EVAL_LIMIT, DEFAULT_VERIFICATION_LIMIT,
};
pub use poisson::{suffix_distributions, OnesDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Expected costs of one strategy on one instance, with oracle values and
/// ratios when available.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub strategy: String,
    pub method: Method,
    /// `E(S)`; absent for per-block verifiers, which are not evaluation
    /// strategies.
    pub expected_cost: Option<f64>,
    pub stderr: Option<f64>,
    /// `E_j(S)` for `j = 1..=B`; empty when estimated.
    pub block_costs: Vec<f64>,
    pub opt_cost: Option<f64>,
    pub opt_block_costs: Option<Vec<f64>>,
}

impl CostReport {
    pub fn ratio(&self) -> Option<f64> {
        Some(self.expected_cost? / self.opt_cost?)
    }

    pub fn block_ratios(&self) -> Option<Vec<f64>> {
        let opt = self.opt_block_costs.as_ref()?;
        if self.block_costs.len() != opt.len() {
            return None;
        }
        Some(
            self.block_costs
                .iter()
                .zip(opt)
                .map(|(&s, &o)| block_ratio(s, o))
                .collect(),
        )
    }

    /// Largest `E_j(S) / E_j(OPT_j)` and the block attaining it.
    pub fn worst_block_ratio(&self) -> Option<(usize, f64)> {
        self.block_ratios()?
            .into_iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (j, r)| match best {
                Some((_, b)) if b >= r => best,
                _ => Some((j + 1, r)),
            })
    }
}

/// Ratio with `0 / 0 = 1`; a positive cost against a zero optimum is
/// infinite.
pub fn block_ratio(cost: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        cost / opt
    } else if cost > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}
