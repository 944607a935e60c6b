//! The three ratio orderings and the prefix constructions built from them.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::Error;
use crate::model::Instance;
use crate::strategies::rr2_permutation;

/// A total order on the test indices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>, n: usize) -> Result<Self, Error> {
        let mut seen = vec![false; n];
        let ok = order.len() == n
            && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true));
        if ok {
            Ok(Self(order))
        } else {
            Err(Error::InvalidPermutation {
                len: order.len(),
                n,
            })
        }
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    /// Entries of the order not contained in `excluded`, in order.
    pub fn without(&self, excluded: &[usize]) -> Vec<usize> {
        let mut skip = vec![false; self.0.len()];
        for &i in excluded {
            skip[i] = true;
        }
        self.0.iter().copied().filter(|&i| !skip[i]).collect()
    }
}

/// The orderings by `c/(1-p)`, by `c/p` and by `c`, each increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SequenceTriple {
    /// Increasing `c_i / (1 - p_i)`: cheapest expected route to a zero.
    pub p0: Permutation,
    /// Increasing `c_i / p_i`: cheapest expected route to a one.
    pub p1: Permutation,
    /// Increasing `c_i`.
    pub pc: Permutation,
}

impl SequenceTriple {
    pub fn build(instance: &Instance) -> Self {
        let c = instance.costs();
        let p = instance.probs();
        Self {
            p0: sorted_by_key(instance.n(), |i| c[i] / (1.0 - p[i])),
            p1: sorted_by_key(instance.n(), |i| c[i] / p[i]),
            pc: sorted_by_key(instance.n(), |i| c[i]),
        }
    }
}

pub fn build_sequences(instance: &Instance) -> SequenceTriple {
    SequenceTriple::build(instance)
}

// Stable sort over 0..n, so equal keys stay in ascending index order.
fn sorted_by_key(n: usize, key: impl Fn(usize) -> f64) -> Permutation {
    let keys: Vec<f64> = (0..n).map(key).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    Permutation(order)
}

/// One step of the greedy head-comparison construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadStep {
    pub p0_head: usize,
    pub p1_head: usize,
    pub chosen: usize,
}

/// Full run of the head-comparison construction: at each step take the
/// cheaper of the current `P0` and `P1` heads (the `P0` head on ties) and
/// remove it from both sequences.
pub fn head_comparison_steps(instance: &Instance) -> Vec<HeadStep> {
    let seqs = SequenceTriple::build(instance);
    let (p0, p1) = (seqs.p0.as_slice(), seqs.p1.as_slice());
    let n = instance.n();
    let mut removed = vec![false; n];
    let (mut h0, mut h1) = (0, 0);
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        while removed[p0[h0]] {
            h0 += 1;
        }
        while removed[p1[h1]] {
            h1 += 1;
        }
        let (a, b) = (p0[h0], p1[h1]);
        let chosen = match instance.cost(a).total_cmp(&instance.cost(b)) {
            Ordering::Greater => b,
            _ => a,
        };
        removed[chosen] = true;
        steps.push(HeadStep {
            p0_head: a,
            p1_head: b,
            chosen,
        });
    }
    steps
}

fn check_k(instance: &Instance, k: usize) -> Result<(), Error> {
    if k > instance.n() {
        Err(Error::KOutOfRange { k, n: instance.n() })
    } else {
        Ok(())
    }
}

/// The `k` cheapest tests, in `Pc` order.
pub fn pi_prefix(instance: &Instance, k: usize) -> Result<Vec<usize>, Error> {
    check_k(instance, k)?;
    let mut order = SequenceTriple::build(instance).pc.into_inner();
    order.truncate(k);
    Ok(order)
}

/// The first `k` picks of [`head_comparison_steps`], in pick order.
pub fn pi_prime_prefix(instance: &Instance, k: usize) -> Result<Vec<usize>, Error> {
    check_k(instance, k)?;
    Ok(head_comparison_steps(instance)
        .into_iter()
        .take(k)
        .map(|s| s.chosen)
        .collect())
}

/// The first `k` tests of the two-way round-robin order with stopping ignored.
pub fn pi_dprime_prefix(instance: &Instance, k: usize) -> Result<Vec<usize>, Error> {
    check_k(instance, k)?;
    let mut order = rr2_permutation(instance).into_inner();
    order.truncate(k);
    Ok(order)
}

/// Cost of a set of tests.
pub fn set_cost(instance: &Instance, indices: &[usize]) -> f64 {
    indices.iter().map(|&i| instance.cost(i)).sum()
}

/// Running cost totals: entry `k` is the cost of the first `k` entries.
pub fn prefix_costs(instance: &Instance, order: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(order.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for &i in order {
        acc += instance.cost(i);
        out.push(acc);
    }
    out
}
