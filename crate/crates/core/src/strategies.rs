//! Testing strategies and the execution engine.
//!
//! Non-adaptive strategies are permutations produced by modified
//! round-robin over the ratio orderings. The per-block verifiers are
//! adaptive only through the outcome counts at one branch point, which is
//! what lets the exact evaluators handle them without enumerating
//! realizations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{BlockThresholds, Instance, Realization, TestState};
use crate::sequences::{Permutation, SequenceTriple};

/// One pick of a modified round-robin merge.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRobinPick {
    pub test: usize,
    /// Lane that was charged, as an index into the lanes passed in.
    pub lane: usize,
    /// Accumulated lane spend before this pick.
    pub accumulators: Vec<f64>,
    /// Next untested entry of every lane before this pick.
    pub heads: Vec<usize>,
}

/// Merges `lanes` (each a permutation of `0..n`) by repeatedly charging
/// the lane that minimizes accumulated spend plus the cost of its next
/// untested entry. Ties go to the earliest lane.
pub fn round_robin_schedule(instance: &Instance, lanes: &[&[usize]]) -> Vec<RoundRobinPick> {
    let n = instance.n();
    let mut tested = vec![false; n];
    let mut cursors = vec![0usize; lanes.len()];
    let mut spend = vec![0.0f64; lanes.len()];
    let mut picks = Vec::with_capacity(n);

    for _ in 0..n {
        let heads: Vec<usize> = lanes
            .iter()
            .zip(cursors.iter_mut())
            .map(|(lane, cursor)| {
                while tested[lane[*cursor]] {
                    *cursor += 1;
                }
                lane[*cursor]
            })
            .collect();

        let mut best = 0;
        let mut best_value = spend[0] + instance.cost(heads[0]);
        for s in 1..lanes.len() {
            let value = spend[s] + instance.cost(heads[s]);
            if value < best_value {
                best = s;
                best_value = value;
            }
        }

        let test = heads[best];
        picks.push(RoundRobinPick {
            test,
            lane: best,
            accumulators: spend.clone(),
            heads,
        });
        tested[test] = true;
        spend[best] = best_value;
    }
    picks
}

/// Three-way round-robin over `P0`, `P1`, `Pc` (in that tie order).
pub fn rr3_schedule(instance: &Instance) -> Vec<RoundRobinPick> {
    let s = SequenceTriple::build(instance);
    round_robin_schedule(instance, &[s.p0.as_slice(), s.p1.as_slice(), s.pc.as_slice()])
}

/// Two-way round-robin over `P0`, `P1`; `P0` is charged when
/// `K0 + c0 <= K1 + c1`.
pub fn rr2_schedule(instance: &Instance) -> Vec<RoundRobinPick> {
    let s = SequenceTriple::build(instance);
    round_robin_schedule(instance, &[s.p0.as_slice(), s.p1.as_slice()])
}

fn schedule_order(picks: Vec<RoundRobinPick>, n: usize) -> Permutation {
    Permutation::new(picks.into_iter().map(|p| p.test).collect(), n)
        .expect("round-robin emits every index once")
}

pub fn rr3_permutation(instance: &Instance) -> Permutation {
    schedule_order(rr3_schedule(instance), instance.n())
}

pub fn rr2_permutation(instance: &Instance) -> Permutation {
    schedule_order(rr2_schedule(instance), instance.n())
}

/// When a run may halt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Stop once the block is a foregone conclusion.
    Evaluate,
    /// Stop once membership in the given block is certified.
    Verify(BlockThresholds),
}

impl StopRule {
    pub fn verify(instance: &Instance, j: usize) -> Result<Self, Error> {
        Ok(StopRule::Verify(instance.thresholds(j)?))
    }

    pub fn holds(&self, instance: &Instance, ones: usize, zeros: usize) -> bool {
        match self {
            StopRule::Evaluate => instance.is_determined_counts(ones, zeros),
            StopRule::Verify(t) => t.is_met(ones, zeros),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Test(usize),
    Stop,
}

/// Test order of a strategy whose only adaptivity is one branch on the
/// one-count after a fixed first phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountStructure {
    pub phase1: Vec<usize>,
    /// After `phase1`, continue with `short_of_zeros` if at least this many
    /// ones were seen, otherwise with `short_of_ones`.
    pub pivot_ones: usize,
    pub short_of_zeros: Vec<usize>,
    pub short_of_ones: Vec<usize>,
}

impl CountStructure {
    pub fn non_adaptive(order: Vec<usize>) -> Self {
        Self {
            phase1: order,
            pivot_ones: 0,
            short_of_zeros: Vec::new(),
            short_of_ones: Vec::new(),
        }
    }
}

/// A deterministic testing strategy together with its stopping rule.
pub trait Policy {
    fn label(&self) -> String;

    fn instance(&self) -> &Instance;

    fn stop_rule(&self) -> StopRule;

    /// Next test to run from a state where the stopping rule does not hold.
    /// `None` means every test has been run.
    fn choose(&self, state: &TestState) -> Option<usize>;

    fn decide(&self, state: &TestState) -> Decision {
        if self
            .stop_rule()
            .holds(self.instance(), state.ones(), state.zeros())
        {
            return Decision::Stop;
        }
        match self.choose(state) {
            Some(i) => Decision::Test(i),
            None => Decision::Stop,
        }
    }

    /// The phase/branch structure, for policies that only look at counts.
    fn count_structure(&self) -> Option<CountStructure> {
        None
    }
}

fn first_untested(order: &[usize], state: &TestState) -> Option<usize> {
    order.iter().copied().find(|&i| !state.is_tested(i))
}

/// A permutation run with a stopping rule.
#[derive(Debug, Clone)]
pub struct NonAdaptive<'a> {
    instance: &'a Instance,
    label: String,
    order: Permutation,
    stop: StopRule,
}

impl<'a> NonAdaptive<'a> {
    pub fn new(
        instance: &'a Instance,
        label: impl Into<String>,
        order: Permutation,
        stop: StopRule,
    ) -> Result<Self, Error> {
        if order.len() != instance.n() {
            return Err(Error::InvalidPermutation {
                len: order.len(),
                n: instance.n(),
            });
        }
        Ok(Self {
            instance,
            label: label.into(),
            order,
            stop,
        })
    }

    pub fn order(&self) -> &Permutation {
        &self.order
    }
}

impl Policy for NonAdaptive<'_> {
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
        first_untested(self.order.as_slice(), state)
    }

    fn count_structure(&self) -> Option<CountStructure> {
        Some(CountStructure::non_adaptive(self.order.as_slice().to_vec()))
    }
}

/// Two-phase block verifier: run a fixed first phase of `α_j + β_j`
/// tests, then chase whichever count is still short along the matching
/// ratio ordering.
#[derive(Debug, Clone)]
pub struct PhasedVerifier<'a> {
    instance: &'a Instance,
    label: String,
    thresholds: BlockThresholds,
    phase1: Vec<usize>,
    zeros_order: Vec<usize>,
    ones_order: Vec<usize>,
}

impl<'a> PhasedVerifier<'a> {
    fn new(
        instance: &'a Instance,
        label: String,
        thresholds: BlockThresholds,
        source: &Permutation,
        seqs: &SequenceTriple,
    ) -> Self {
        let phase1 = source.as_slice()[..thresholds.certificate_len()].to_vec();
        Self {
            instance,
            label,
            thresholds,
            zeros_order: seqs.p0.without(&phase1),
            ones_order: seqs.p1.without(&phase1),
            phase1,
        }
    }

    pub fn thresholds(&self) -> BlockThresholds {
        self.thresholds
    }

    pub fn phase1(&self) -> &[usize] {
        &self.phase1
    }
}

impl Policy for PhasedVerifier<'_> {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn instance(&self) -> &Instance {
        self.instance
    }

    fn stop_rule(&self) -> StopRule {
        StopRule::Verify(self.thresholds)
    }

    fn choose(&self, state: &TestState) -> Option<usize> {
        if let Some(i) = first_untested(&self.phase1, state) {
            return Some(i);
        }
        if state.ones() >= self.thresholds.needed_ones {
            first_untested(&self.zeros_order, state)
        } else {
            first_untested(&self.ones_order, state)
        }
    }

    fn count_structure(&self) -> Option<CountStructure> {
        Some(CountStructure {
            phase1: self.phase1.clone(),
            pivot_ones: self.thresholds.needed_ones,
            short_of_zeros: self.zeros_order.clone(),
            short_of_ones: self.ones_order.clone(),
        })
    }
}

/// Verifier for block `j` whose first phase is the `α_j + β_j` cheapest
/// tests.
pub fn vj_policy(instance: &Instance, j: usize) -> Result<PhasedVerifier<'_>, Error> {
    let t = instance.thresholds(j)?;
    let seqs = SequenceTriple::build(instance);
    Ok(PhasedVerifier::new(instance, format!("vj[{j}]"), t, &seqs.pc, &seqs))
}

/// Verifier for block `j` whose first phase is the first `α_j + β_j`
/// tests of the two-way round-robin order.
pub fn vprime_policy(instance: &Instance, j: usize) -> Result<PhasedVerifier<'_>, Error> {
    let t = instance.thresholds(j)?;
    let seqs = SequenceTriple::build(instance);
    let rr2 = rr2_permutation(instance);
    Ok(PhasedVerifier::new(instance, format!("vprime[{j}]"), t, &rr2, &seqs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub outcome: bool,
    pub cumulative_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceResult {
    Block(usize),
    Verified,
    NotVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub result: TraceResult,
}

impl ExecutionTrace {
    pub fn cost(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_cost)
    }

    pub fn tested(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.index)
    }
}

/// Runs `policy` against a fixed realization.
pub fn execute<P: Policy + ?Sized>(policy: &P, a: &Realization) -> ExecutionTrace {
    let instance = policy.instance();
    assert_eq!(a.len(), instance.n(), "realization length must equal n");
    let mut state = TestState::new(instance.n());
    let mut steps = Vec::new();
    let mut spent = 0.0;
    while let Decision::Test(index) = policy.decide(&state) {
        let outcome = a.bits()[index];
        state.record(index, outcome);
        spent += instance.cost(index);
        steps.push(TraceStep {
            index,
            outcome,
            cumulative_cost: spent,
        });
    }
    let result = match policy.stop_rule() {
        StopRule::Evaluate => TraceResult::Block(
            instance
                .determined_block(state.ones(), state.zeros())
                .expect("evaluation runs until determined"),
        ),
        StopRule::Verify(t) if t.is_met(state.ones(), state.zeros()) => TraceResult::Verified,
        StopRule::Verify(_) => TraceResult::NotVerified,
    };
    ExecutionTrace { steps, result }
}

pub fn run_nonadaptive(
    perm: &Permutation,
    a: &Realization,
    stop: StopRule,
    instance: &Instance,
) -> Result<ExecutionTrace, Error> {
    let policy = NonAdaptive::new(instance, "perm", perm.clone(), stop)?;
    Ok(execute(&policy, a))
}

/// Strategy names accepted by the CLI and experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Rr3,
    Rr2,
    Vj,
    Vprime,
    Pc,
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Rr3,
        StrategyKind::Rr2,
        StrategyKind::Vj,
        StrategyKind::Vprime,
        StrategyKind::Pc,
        StrategyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Rr3 => "rr3",
            StrategyKind::Rr2 => "rr2",
            StrategyKind::Vj => "vj",
            StrategyKind::Vprime => "vprime",
            StrategyKind::Pc => "pc",
            StrategyKind::Random => "random",
        }
    }

    /// Whether the strategy is a single non-adaptive order, usable for
    /// evaluation; the verifiers are built per block.
    pub fn is_evaluation_strategy(self) -> bool {
        !matches!(self, StrategyKind::Vj | StrategyKind::Vprime)
    }

    /// Proven bound on the ratio `E(S) / E(OPT)`.
    pub fn evaluation_bound(self) -> Option<f64> {
        match self {
            StrategyKind::Rr3 | StrategyKind::Rr2 => Some(6.0),
            _ => None,
        }
    }

    /// Proven bound on `E_j(S) / E_j(OPT_j)` for every block `j`.
    pub fn verification_bound(self) -> Option<f64> {
        match self {
            StrategyKind::Rr3 | StrategyKind::Rr2 => Some(6.0),
            StrategyKind::Vj => Some(2.0),
            StrategyKind::Vprime => Some(5.0),
            StrategyKind::Pc | StrategyKind::Random => None,
        }
    }

    /// The non-adaptive order of an evaluation strategy. `seed` only
    /// affects [`StrategyKind::Random`].
    pub fn permutation(self, instance: &Instance, seed: u64) -> Option<Permutation> {
        match self {
            StrategyKind::Rr3 => Some(rr3_permutation(instance)),
            StrategyKind::Rr2 => Some(rr2_permutation(instance)),
            StrategyKind::Pc => Some(SequenceTriple::build(instance).pc),
            StrategyKind::Random => Some(random_permutation(instance.n(), seed)),
            StrategyKind::Vj | StrategyKind::Vprime => None,
        }
    }

    /// The policy this strategy uses for block `j`.
    pub fn block_policy<'a>(
        self,
        instance: &'a Instance,
        j: usize,
        seed: u64,
    ) -> Result<Box<dyn Policy + Sync + 'a>, Error> {
        Ok(match self {
            StrategyKind::Vj => Box::new(vj_policy(instance, j)?),
            StrategyKind::Vprime => Box::new(vprime_policy(instance, j)?),
            other => Box::new(NonAdaptive::new(
                instance,
                other.name(),
                other.permutation(instance, seed).expect("evaluation strategy"),
                StopRule::verify(instance, j)?,
            )?),
        })
    }

    /// The evaluation policy, if this is an evaluation strategy.
    pub fn evaluation_policy(self, instance: &Instance, seed: u64) -> Option<NonAdaptive<'_>> {
        let order = self.permutation(instance, seed)?;
        Some(
            NonAdaptive::new(instance, self.name(), order, StopRule::Evaluate)
                .expect("permutation sized to instance"),
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rr3" | "rr" => Ok(StrategyKind::Rr3),
            "rr2" => Ok(StrategyKind::Rr2),
            "vj" => Ok(StrategyKind::Vj),
            "vprime" | "v'" => Ok(StrategyKind::Vprime),
            "pc" | "pconly" => Ok(StrategyKind::Pc),
            "random" => Ok(StrategyKind::Random),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Uniformly random order drawn from a seeded ChaCha stream.
pub fn random_permutation(n: usize, seed: u64) -> Permutation {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    Permutation::new(order, n).expect("shuffle preserves a permutation")
}
