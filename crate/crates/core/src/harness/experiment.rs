use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::evaluators::CostReport;
use crate::model::Instance;
use crate::sequences::{head_comparison_steps, prefix_costs, SequenceTriple};
use crate::strategies::{rr2_permutation, StrategyKind};

use super::config::ExperimentConfig;
use super::generator::gen_instance;
use super::{oracle_costs, strategy_costs, within_bound, EvalOptions};

/// CSV header, in column order.
pub const COLUMNS: [&str; 20] = [
    "instance_id",
    "n",
    "blocks",
    "strategy",
    "method",
    "cost",
    "cost_stderr",
    "opt_cost",
    "ratio",
    "eval_bound",
    "eval_pass",
    "worst_block",
    "worst_block_ratio",
    "block_bound",
    "block_pass",
    "pi_prime_ratio",
    "pi_dprime_prime_ratio",
    "pi_dprime_ratio",
    "pi_pass",
    "error",
];

/// Slack on the prefix-cost inequalities, which involve only sums.
const PI_SLACK: f64 = 1e-12;

/// Worst ratios over all `k` of the prefix-cost inequalities
/// `cost(Π′) ≤ 2 cost(Π)`, `cost(Π″) ≤ 2 cost(Π′)`, `cost(Π″) ≤ 4 cost(Π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiBounds {
    pub prime_over_pi: f64,
    pub dprime_over_prime: f64,
    pub dprime_over_pi: f64,
}

impl PiBounds {
    pub fn pass(&self) -> bool {
        self.prime_over_pi <= 2.0 * (1.0 + PI_SLACK)
            && self.dprime_over_prime <= 2.0 * (1.0 + PI_SLACK)
            && self.dprime_over_pi <= 4.0 * (1.0 + PI_SLACK)
    }
}

pub fn pi_bounds(instance: &Instance) -> PiBounds {
    let pc = SequenceTriple::build(instance).pc;
    let prime: Vec<usize> = head_comparison_steps(instance)
        .into_iter()
        .map(|s| s.chosen)
        .collect();
    let dprime = rr2_permutation(instance);
    let pi = prefix_costs(instance, pc.as_slice());
    let pi1 = prefix_costs(instance, &prime);
    let pi2 = prefix_costs(instance, dprime.as_slice());
    let mut out = PiBounds {
        prime_over_pi: 0.0,
        dprime_over_prime: 0.0,
        dprime_over_pi: 0.0,
    };
    for k in 1..=instance.n() {
        out.prime_over_pi = out.prime_over_pi.max(pi1[k] / pi[k]);
        out.dprime_over_prime = out.dprime_over_prime.max(pi2[k] / pi1[k]);
        out.dprime_over_pi = out.dprime_over_pi.max(pi2[k] / pi[k]);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub instance_id: usize,
    pub n: Option<usize>,
    pub blocks: Option<usize>,
    pub strategy: String,
    pub method: Option<String>,
    pub cost: Option<f64>,
    pub cost_stderr: Option<f64>,
    pub opt_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub eval_bound: Option<f64>,
    pub eval_pass: Option<bool>,
    pub worst_block: Option<usize>,
    pub worst_block_ratio: Option<f64>,
    pub block_bound: Option<f64>,
    pub block_pass: Option<bool>,
    pub pi_prime_ratio: Option<f64>,
    pub pi_dprime_prime_ratio: Option<f64>,
    pub pi_dprime_ratio: Option<f64>,
    pub pi_pass: Option<bool>,
    pub error: Option<String>,
}

impl ReportRow {
    fn from_report(id: usize, instance: &Instance, kind: StrategyKind, r: &CostReport, pi: &PiBounds) -> Self {
        let ratio = r.ratio();
        let worst = r.worst_block_ratio();
        let eval_bound = kind.evaluation_bound().filter(|_| ratio.is_some());
        let block_bound = kind.verification_bound().filter(|_| worst.is_some());
        Self {
            instance_id: id,
            n: Some(instance.n()),
            blocks: Some(instance.num_blocks()),
            strategy: kind.name().to_string(),
            method: Some(
                match r.method {
                    crate::evaluators::Method::Exact => "exact",
                    crate::evaluators::Method::MonteCarlo => "montecarlo",
                }
                .to_string(),
            ),
            cost: r.expected_cost,
            cost_stderr: r.stderr,
            opt_cost: r.opt_cost,
            ratio,
            eval_bound,
            eval_pass: eval_bound.zip(ratio).map(|(b, x)| within_bound(x, b)),
            worst_block: worst.map(|w| w.0),
            worst_block_ratio: worst.map(|w| w.1),
            block_bound,
            block_pass: block_bound.zip(worst).map(|(b, w)| within_bound(w.1, b)),
            pi_prime_ratio: Some(pi.prime_over_pi),
            pi_dprime_prime_ratio: Some(pi.dprime_over_prime),
            pi_dprime_ratio: Some(pi.dprime_over_pi),
            pi_pass: Some(pi.pass()),
            error: None,
        }
    }

    fn failed(id: usize, err: &Error) -> Self {
        Self {
            instance_id: id,
            strategy: "error".into(),
            error: Some(err.to_string()),
            ..Default::default()
        }
    }

    /// Whether any bound flag on this row failed.
    pub fn violates(&self) -> bool {
        [self.eval_pass, self.block_pass, self.pi_pass].contains(&Some(false))
    }
}

/// Largest observed `E(S) / E(OPT)` for one strategy across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstRatio {
    pub strategy: String,
    pub ratio: f64,
    pub instance_id: usize,
    pub instance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub instances: usize,
    pub rows: usize,
    pub violations: usize,
    pub errors: usize,
    pub worst: Vec<WorstRatio>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub summary: BenchSummary,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.summary.violations == 0 && self.summary.errors == 0
    }

    pub fn worst_for(&self, kind: StrategyKind) -> Option<&WorstRatio> {
        self.summary.worst.iter().find(|w| w.strategy == kind.name())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(COLUMNS)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, Error> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Human-readable summary lines.
    pub fn summary_lines(&self) -> Vec<String> {
        let s = &self.summary;
        let mut lines = vec![format!(
            "instances={} rows={} violations={} errors={}",
            s.instances, s.rows, s.violations, s.errors
        )];
        for w in &s.worst {
            lines.push(format!(
                "max E({})/E(OPT) = {} at instance {}: {}",
                w.strategy, w.ratio, w.instance_id, w.instance
            ));
        }
        lines
    }
}

fn instance_rows(config: &ExperimentConfig, id: usize) -> Result<(Instance, Vec<ReportRow>), Error> {
    let spec = config.instance_spec(id);
    let instance = gen_instance(&spec)?;
    let options = EvalOptions {
        seed: spec.seed,
        trials: config.trials,
        exact_max_n: config.exact_max_n,
        oracle_max_n: config.oracle_max_n,
        oracle: config.oracle,
    };
    let pi = pi_bounds(&instance);
    let (opt, opt_blocks) = oracle_costs(&instance, &options)?;
    let mut rows = Vec::new();
    for kind in config.strategy_order() {
        let mut report = strategy_costs(&instance, kind, &options)?;
        report.opt_cost = opt;
        report.opt_block_costs = opt_blocks.clone();
        rows.push(ReportRow::from_report(id, &instance, kind, &report, &pi));
    }
    Ok((instance, rows))
}

/// Runs the sweep described by `config`. Instances are processed in
/// parallel; rows come out ordered by instance id, then strategy.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, Error> {
    config.check()?;
    let per_instance: Vec<(Option<Instance>, Vec<ReportRow>)> = (0..config.instances)
        .into_par_iter()
        .map(|id| match instance_rows(config, id) {
            Ok((instance, rows)) => (Some(instance), rows),
            Err(e) => (None, vec![ReportRow::failed(id, &e)]),
        })
        .collect();

    let mut worst: Vec<WorstRatio> = Vec::new();
    let mut rows = Vec::new();
    for (instance, instance_rows) in per_instance {
        for row in &instance_rows {
            let (Some(instance), Some(ratio)) = (&instance, row.ratio) else {
                continue;
            };
            if !matches!(row.strategy.as_str(), "rr3" | "rr2") {
                continue;
            }
            match worst.iter_mut().find(|w| w.strategy == row.strategy) {
                Some(w) if w.ratio >= ratio => {}
                Some(w) => {
                    w.ratio = ratio;
                    w.instance_id = row.instance_id;
                    w.instance = instance.to_json();
                }
                None => worst.push(WorstRatio {
                    strategy: row.strategy.clone(),
                    ratio,
                    instance_id: row.instance_id,
                    instance: instance.to_json(),
                }),
            }
        }
        rows.extend(instance_rows);
    }
    worst.sort_by(|a, b| a.strategy.cmp(&b.strategy));

    let summary = BenchSummary {
        instances: config.instances,
        rows: rows.len(),
        violations: rows.iter().filter(|r| r.violates()).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        worst,
    };
    Ok(Report { rows, summary })
}
