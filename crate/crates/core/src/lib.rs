//! Non-adaptive strategies for unweighted stochastic score classification.
//!
//! `n` tests with positive costs `c_i` and independent success
//! probabilities `p_i` decide a score, the number of positive outcomes.
//! Cut points `0 = α_1 < … < α_{B+1} = n + 1` split the scores into `B`
//! blocks, and a strategy pays for tests until the block of the score is
//! a foregone conclusion.
//!
//! The crate provides:
//!
//! * the three-way and two-way modified round-robin orders ([`strategies`]),
//!   both within a factor 6 of the optimal adaptive strategy;
//! * the per-block verifiers they are analysed against;
//! * exact expected-cost evaluators and subset-DP optimal oracles
//!   ([`evaluators`]);
//! * a seeded experiment harness that certifies the bounds on random
//!   instances ([`harness`]).

pub mod error;
pub mod evaluators;
pub mod harness;
pub mod model;
pub mod sequences;
pub mod strategies;

pub use error::{Error, Violation};
pub use model::{BlockThresholds, Instance, RawInstance, Realization, TestState};
pub use sequences::{build_sequences, Permutation, SequenceTriple};
pub use strategies::{
    execute, rr2_permutation, rr3_permutation, run_nonadaptive, vj_policy, vprime_policy,
    ExecutionTrace, NonAdaptive, Policy, StopRule, StrategyKind,
};
