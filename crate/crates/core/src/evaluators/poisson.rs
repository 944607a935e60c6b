use crate::model::Instance;

/// Distribution of the number of ones among a set of independent tests.
#[derive(Debug, Clone, PartialEq)]
pub struct OnesDistribution {
    mass: Vec<f64>,
}

impl OnesDistribution {
    /// Distribution of zero variables: all mass on 0.
    pub fn empty() -> Self {
        Self { mass: vec![1.0] }
    }

    pub fn from_probs(probs: impl IntoIterator<Item = f64>) -> Self {
        let mut d = Self::empty();
        for p in probs {
            d.push(p);
        }
        d
    }

    pub fn of_tests(instance: &Instance, tests: &[usize]) -> Self {
        Self::from_probs(tests.iter().map(|&i| instance.prob(i)))
    }

    /// Adds one more Bernoulli(`p`) variable.
    pub fn push(&mut self, p: f64) {
        self.mass.push(0.0);
        for k in (1..self.mass.len()).rev() {
            self.mass[k] = self.mass[k] * (1.0 - p) + self.mass[k - 1] * p;
        }
        self.mass[0] *= 1.0 - p;
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pmf(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    /// `P(lo <= X <= hi)`, clipped to the support.
    pub fn mass_between(&self, lo: usize, hi: usize) -> f64 {
        if lo > hi || lo > self.len() {
            return 0.0;
        }
        self.mass[lo..=hi.min(self.len())].iter().sum()
    }
}

/// Entry `t` is the distribution of ones among `order[t..]`.
pub fn suffix_distributions(instance: &Instance, order: &[usize]) -> Vec<OnesDistribution> {
    let mut out = vec![OnesDistribution::empty(); order.len() + 1];
    for t in (0..order.len()).rev() {
        let mut d = out[t + 1].clone();
        d.push(instance.prob(order[t]));
        out[t] = d;
    }
    out
}
