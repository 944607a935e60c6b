use std::fmt;

use thiserror::Error;

/// A single broken instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyInstance,
    NonPositiveCost { index: usize, value: f64 },
    ProbOutOfOpenInterval { index: usize, value: f64 },
    AlphasNotStrictlyIncreasing { position: usize },
    AlphaEndpointMismatch { first: usize, last: usize, n: usize },
    LengthMismatch { field: &'static str, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyInstance => write!(f, "n must be at least 1"),
            Violation::NonPositiveCost { index, value } => {
                write!(f, "cost of test {index} is {value}, must be positive and finite")
            }
            Violation::ProbOutOfOpenInterval { index, value } => {
                write!(f, "probability of test {index} is {value}, must lie in (0, 1)")
            }
            Violation::AlphasNotStrictlyIncreasing { position } => {
                write!(f, "alphas[{position}] >= alphas[{}]", position + 1)
            }
            Violation::AlphaEndpointMismatch { first, last, n } => write!(
                f,
                "alphas must start at 0 and end at n+1 = {}, got {first}..{last}",
                n + 1
            ),
            Violation::LengthMismatch {
                field,
                expected,
                found,
            } => write!(f, "{field} has length {found}, expected {expected}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("score {score} outside 0..={n}")]
    ScoreOutOfRange { score: usize, n: usize },
    #[error("block {block} outside 1..={blocks}")]
    BlockOutOfRange { block: usize, blocks: usize },
    #[error("prefix length {k} outside 0..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("order of length {len} is not a permutation of 0..{n}")]
    InvalidPermutation { len: usize, n: usize },
    #[error("instance has n = {n}, oracle limit is {limit}")]
    InstanceTooLarge { n: usize, limit: usize },
    #[error("strategy `{0}` is not summarized by outcome counts and cannot be evaluated exactly")]
    UnsupportedStrategyShape(String),
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
