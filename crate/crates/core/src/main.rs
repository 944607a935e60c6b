use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ssclass::evaluators::{
    block_ratio, exact_verification_cost, monte_carlo_cost, opt_adaptive_eval,
    opt_verification_costs, DEFAULT_EVAL_LIMIT, DEFAULT_VERIFICATION_LIMIT,
};
use ssclass::harness::{
    evaluate_strategy, gen_instance, run_experiment, within_bound, CostDistribution, EvalOptions,
    ExperimentConfig, GeneratorSpec, IntervalScheme,
};
use ssclass::{Error, Instance, StrategyKind};

#[derive(Parser)]
#[command(name = "ssclass", version, about = "Round-robin strategies for stochastic score classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance as JSON.
    Gen(GenArgs),
    /// Expected evaluation cost of a strategy.
    Eval(EvalArgs),
    /// Expected verification cost of a strategy for one block.
    Verify(VerifyArgs),
    /// Optimal adaptive evaluation and verification costs.
    Oracle(OracleArgs),
    /// Run an experiment sweep and write the CSV report.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CostDistArg {
    Uniform,
    Loguniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntervalArg {
    Random,
    Equal,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    blocks: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    cost_dist: CostDistArg,
    #[arg(long, default_value_t = 1.0)]
    cost_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    cost_hi: f64,
    #[arg(long, default_value_t = 0.01)]
    prob_eps: f64,
    #[arg(long, value_enum, default_value = "random")]
    intervals: IntervalArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Limits {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_EVAL_LIMIT)]
    exact_max_n: usize,
    #[arg(long, default_value_t = DEFAULT_VERIFICATION_LIMIT)]
    oracle_max_n: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "rr3")]
    strategy: StrategyKind,
    /// Also compute the optimal adaptive costs and ratios.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    limits: Limits,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Block index, 1-based.
    #[arg(long)]
    block: usize,
    #[arg(long, default_value = "rr3")]
    strategy: StrategyKind,
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    limits: Limits,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EVAL_LIMIT)]
    exact_max_n: usize,
    #[arg(long, default_value_t = DEFAULT_VERIFICATION_LIMIT)]
    oracle_max_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    exact_max_n: Option<usize>,
    #[arg(long)]
    oracle_max_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Pass,
    Violation,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_instance(path: &Path) -> Result<Instance, Error> {
    Instance::from_json(&fs::read_to_string(path)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, &text)
}

fn options(limits: &Limits, oracle: bool) -> EvalOptions {
    EvalOptions {
        seed: limits.seed,
        trials: limits.trials,
        exact_max_n: limits.exact_max_n,
        oracle_max_n: limits.oracle_max_n,
        oracle,
    }
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Gen(args) => {
            let spec = GeneratorSpec {
                n: args.n,
                blocks: args.blocks,
                cost_dist: match args.cost_dist {
                    CostDistArg::Uniform => CostDistribution::Uniform,
                    CostDistArg::Loguniform => CostDistribution::LogUniform,
                },
                cost_lo: args.cost_lo,
                cost_hi: args.cost_hi,
                prob_eps: args.prob_eps,
                intervals: match args.intervals {
                    IntervalArg::Random => IntervalScheme::Random,
                    IntervalArg::Equal => IntervalScheme::Equal,
                },
                seed: args.seed,
            };
            let instance = gen_instance(&spec)?;
            emit(args.out.as_deref(), &(instance.to_json() + "\n"))?;
            Ok(Outcome::Pass)
        }
        Command::Eval(args) => {
            let instance = read_instance(&args.instance)?;
            let report = evaluate_strategy(&instance, args.strategy, &options(&args.limits, args.oracle))?;

            #[derive(Serialize)]
            struct EvalOutput<'a> {
                #[serde(flatten)]
                report: &'a ssclass::evaluators::CostReport,
                ratio: Option<f64>,
                block_ratios: Option<Vec<f64>>,
            }
            let ratio = report.ratio();
            let pass = ratio
                .zip(args.strategy.evaluation_bound())
                .is_none_or(|(r, b)| within_bound(r, b));
            emit_json(
                args.out.as_deref(),
                &EvalOutput {
                    report: &report,
                    ratio,
                    block_ratios: report.block_ratios(),
                },
            )?;
            Ok(if pass { Outcome::Pass } else { Outcome::Violation })
        }
        Command::Verify(args) => {
            let instance = read_instance(&args.instance)?;
            let opts = options(&args.limits, args.oracle);
            let policy = args.strategy.block_policy(&instance, args.block, opts.seed)?;
            let exact = instance.n() <= opts.exact_max_n;
            let (cost, stderr) = if exact {
                (exact_verification_cost(&*policy, args.block)?, None)
            } else {
                let est = monte_carlo_cost(&*policy, opts.trials, opts.seed, Some(args.block));
                (est.mean, Some(est.stderr))
            };
            let opt = if args.oracle && instance.n() <= opts.oracle_max_n {
                let opt = ssclass::evaluators::opt_adaptive_verification(
                    &instance,
                    args.block,
                    opts.oracle_max_n,
                )?;
                Some(opt.value())
            } else {
                None
            };

            #[derive(Serialize)]
            struct VerifyOutput {
                strategy: String,
                block: usize,
                method: &'static str,
                cost: f64,
                stderr: Option<f64>,
                opt_cost: Option<f64>,
                ratio: Option<f64>,
            }
            let ratio = opt.map(|o| block_ratio(cost, o));
            let pass = ratio
                .zip(args.strategy.verification_bound())
                .is_none_or(|(r, b)| within_bound(r, b));
            emit_json(
                args.out.as_deref(),
                &VerifyOutput {
                    strategy: args.strategy.name().into(),
                    block: args.block,
                    method: if exact { "exact" } else { "montecarlo" },
                    cost,
                    stderr,
                    opt_cost: opt,
                    ratio,
                },
            )?;
            Ok(if pass { Outcome::Pass } else { Outcome::Violation })
        }
        Command::Oracle(args) => {
            let instance = read_instance(&args.instance)?;

            #[derive(Serialize)]
            struct OracleOutput {
                opt_cost: f64,
                opt_block_costs: Option<Vec<f64>>,
            }
            let opt_cost = opt_adaptive_eval(&instance, args.exact_max_n)?.value();
            let opt_block_costs = if instance.n() <= args.oracle_max_n {
                Some(opt_verification_costs(&instance, args.oracle_max_n)?)
            } else {
                None
            };
            emit_json(
                args.out.as_deref(),
                &OracleOutput {
                    opt_cost,
                    opt_block_costs,
                },
            )?;
            Ok(Outcome::Pass)
        }
        Command::Bench(args) => {
            let mut config = ExperimentConfig::from_text(&fs::read_to_string(&args.config)?)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if let Some(trials) = args.trials {
                config.trials = trials;
            }
            if let Some(n) = args.exact_max_n {
                config.exact_max_n = n;
            }
            if let Some(n) = args.oracle_max_n {
                config.oracle_max_n = n;
            }
            let out = args.out.or_else(|| config.out.clone().map(PathBuf::from));

            let report = run_experiment(&config)?;
            emit(out.as_deref(), &report.to_csv_string()?)?;
            for line in report.summary_lines() {
                eprintln!("{line}");
            }
            if report.summary.errors > 0 {
                return Err(Error::Config(format!(
                    "{} instance(s) failed; see error rows",
                    report.summary.errors
                )));
            }
            Ok(if report.all_pass() {
                Outcome::Pass
            } else {
                Outcome::Violation
            })
        }
    }
}
