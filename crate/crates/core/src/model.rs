//! Problem instances, block arithmetic and the stopping rule.
//!
//! Test indices are 0-based throughout the library. Block indices are
//! 1-based (`1..=B`), so block `j` covers the scores
//! `alphas[j-1] ..= alphas[j] - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Violation};

/// Instance data as read from JSON, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub n: usize,
    pub costs: Vec<f64>,
    pub probs: Vec<f64>,
    pub alphas: Vec<usize>,
}

/// A validated problem instance.
///
/// `alphas` holds every interval endpoint including `0` and `n + 1`, so
/// `alphas.len() == B + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    n: usize,
    costs: Vec<f64>,
    probs: Vec<f64>,
    alphas: Vec<usize>,
}

/// Counts needed to certify that a realization lies in block `block`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockThresholds {
    pub block: usize,
    pub needed_ones: usize,
    pub needed_zeros: usize,
}

impl BlockThresholds {
    pub fn is_met(&self, ones: usize, zeros: usize) -> bool {
        ones >= self.needed_ones && zeros >= self.needed_zeros
    }

    /// Number of tests any certificate for this block must contain.
    pub fn certificate_len(&self) -> usize {
        self.needed_ones + self.needed_zeros
    }
}

/// A full assignment of outcomes to the `n` tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Realization {
    bits: Vec<bool>,
}

impl Realization {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Realization whose bit `i` is bit `i` of `mask`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn zeros(&self) -> usize {
        self.len() - self.ones()
    }
}

/// Execution state: which tests have been run and the outcome counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestState {
    tested: Vec<bool>,
    ones: usize,
    zeros: usize,
}

impl TestState {
    pub fn new(n: usize) -> Self {
        Self {
            tested: vec![false; n],
            ones: 0,
            zeros: 0,
        }
    }

    pub fn record(&mut self, index: usize, outcome: bool) {
        assert!(!self.tested[index], "test {index} already performed");
        self.tested[index] = true;
        if outcome {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
    }

    /// State with the tests in `mask` run and `ones` of them positive.
    pub fn from_mask(n: usize, mask: u64, ones: usize) -> Self {
        let tested: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let count = tested.iter().filter(|&&t| t).count();
        assert!(ones <= count, "more ones than tested variables");
        Self {
            tested,
            ones,
            zeros: count - ones,
        }
    }

    /// Bitmask of tested indices; requires `n <= 64`.
    pub fn tested_mask(&self) -> u64 {
        self.tested
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn is_tested(&self, index: usize) -> bool {
        self.tested[index]
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn zeros(&self) -> usize {
        self.zeros
    }

    pub fn num_tested(&self) -> usize {
        self.ones + self.zeros
    }

    pub fn n(&self) -> usize {
        self.tested.len()
    }
}

impl Instance {
    /// Validates raw data, reporting every violated invariant at once.
    pub fn validate(raw: RawInstance) -> Result<Self, Error> {
        let mut violations = Vec::new();
        let RawInstance {
            n,
            costs,
            probs,
            alphas,
        } = raw;

        if n == 0 {
            violations.push(Violation::EmptyInstance);
        }
        if costs.len() != n {
            violations.push(Violation::LengthMismatch {
                field: "costs",
                expected: n,
                found: costs.len(),
            });
        }
        if probs.len() != n {
            violations.push(Violation::LengthMismatch {
                field: "probs",
                expected: n,
                found: probs.len(),
            });
        }
        for (index, &value) in costs.iter().enumerate() {
            // `!(value > 0)` also rejects NaN.
            if !(value > 0.0 && value.is_finite()) {
                violations.push(Violation::NonPositiveCost { index, value });
            }
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                violations.push(Violation::ProbOutOfOpenInterval { index, value });
            }
        }
        if alphas.len() < 2 {
            violations.push(Violation::LengthMismatch {
                field: "alphas",
                expected: 2,
                found: alphas.len(),
            });
        } else {
            let first = alphas[0];
            let last = alphas[alphas.len() - 1];
            if first != 0 || last != n + 1 {
                violations.push(Violation::AlphaEndpointMismatch { first, last, n });
            }
            if let Some(position) = alphas.windows(2).position(|w| w[0] >= w[1]) {
                violations.push(Violation::AlphasNotStrictlyIncreasing { position });
            }
        }

        if violations.is_empty() {
            Ok(Self {
                n,
                costs,
                probs,
                alphas,
            })
        } else {
            Err(Error::InvalidInstance(violations))
        }
    }

    pub fn new(costs: Vec<f64>, probs: Vec<f64>, alphas: Vec<usize>) -> Result<Self, Error> {
        Self::validate(RawInstance {
            n: costs.len(),
            costs,
            probs,
            alphas,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let raw: RawInstance = serde_json::from_str(text)?;
        Self::validate(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization is infallible")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphas(&self) -> &[usize] {
        &self.alphas
    }

    pub fn cost(&self, index: usize) -> f64 {
        self.costs[index]
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Number of blocks `B`.
    pub fn num_blocks(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    /// Inclusive score range `(lo, hi)` of block `j`.
    pub fn block_range(&self, j: usize) -> Result<(usize, usize), Error> {
        self.check_block(j)?;
        Ok((self.alphas[j - 1], self.alphas[j] - 1))
    }

    pub fn thresholds(&self, j: usize) -> Result<BlockThresholds, Error> {
        let (lo, hi) = self.block_range(j)?;
        Ok(BlockThresholds {
            block: j,
            needed_ones: lo,
            needed_zeros: self.n - hi,
        })
    }

    pub fn all_thresholds(&self) -> impl Iterator<Item = BlockThresholds> + '_ {
        (1..=self.num_blocks()).map(|j| self.thresholds(j).expect("block in range"))
    }

    pub fn check_block(&self, j: usize) -> Result<(), Error> {
        if j == 0 || j > self.num_blocks() {
            Err(Error::BlockOutOfRange {
                block: j,
                blocks: self.num_blocks(),
            })
        } else {
            Ok(())
        }
    }

    /// The block whose interval contains `score`.
    pub fn block_of(&self, score: usize) -> Result<usize, Error> {
        if score > self.n {
            return Err(Error::ScoreOutOfRange { score, n: self.n });
        }
        // alphas[0] = 0 <= score < n + 1 = alphas[B], so the partition point
        // lies in 1..=B.
        Ok(self.alphas.partition_point(|&a| a <= score))
    }

    /// The block already certified by `ones` and `zeros`, if any.
    pub fn determined_block(&self, ones: usize, zeros: usize) -> Option<usize> {
        debug_assert!(ones + zeros <= self.n);
        let lowest = self.block_of(ones).ok()?;
        let highest = self.block_of(self.n - zeros).ok()?;
        (lowest == highest).then_some(lowest)
    }

    /// True once every completion of the untested variables lands in the
    /// same block.
    pub fn is_determined(&self, state: &TestState) -> bool {
        self.is_determined_counts(state.ones(), state.zeros())
    }

    pub fn is_determined_counts(&self, ones: usize, zeros: usize) -> bool {
        self.determined_block(ones, zeros).is_some()
    }

    /// The threshold form of the stopping rule: some block has both its
    /// one-count and zero-count requirement met.
    pub fn is_determined_by_thresholds(&self, ones: usize, zeros: usize) -> bool {
        self.all_thresholds().any(|t| t.is_met(ones, zeros))
    }

    /// Whether a state with `ones` ones and `untested` untested variables can
    /// still end in block `j`.
    pub fn block_reachable(&self, j: usize, ones: usize, untested: usize) -> bool {
        let (lo, hi) = match self.block_range(j) {
            Ok(range) => range,
            Err(_) => return false,
        };
        ones <= hi && ones + untested >= lo
    }

    pub fn realization_prob(&self, a: &Realization) -> f64 {
        assert_eq!(a.len(), self.n, "realization length must equal n");
        a.bits()
            .iter()
            .zip(&self.probs)
            .map(|(&bit, &p)| if bit { p } else { 1.0 - p })
            .product()
    }

    /// The block `f(a)`.
    pub fn classify(&self, a: &Realization) -> usize {
        self.block_of(a.ones()).expect("score never exceeds n")
    }
}
