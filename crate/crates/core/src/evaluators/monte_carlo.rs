use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{Instance, Realization};
use crate::strategies::{execute, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Draws realization number `trial` of the run seeded by `seed`.
///
/// Each trial owns ChaCha stream `trial` under key `seed`, so a trial's
/// draw does not depend on which worker runs it.
pub fn sample_realization(instance: &Instance, seed: u64, trial: u64) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    Realization::new(
        instance
            .probs()
            .iter()
            .map(|&p| rng.gen::<f64>() < p)
            .collect(),
    )
}

/// Sample mean of trace cost over `trials` seeded realizations. With
/// `block = Some(j)`, realizations outside block `j` contribute zero, which
/// estimates the unnormalized `E_j`.
pub fn monte_carlo_cost<P: Policy + Sync + ?Sized>(
    policy: &P,
    trials: u64,
    seed: u64,
    block: Option<usize>,
) -> McEstimate {
    assert!(trials >= 1, "at least one trial is required");
    let instance = policy.instance();
    let costs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let a = sample_realization(instance, seed, trial);
            match block {
                Some(j) if instance.classify(&a) != j => 0.0,
                _ => execute(policy, &a).cost(),
            }
        })
        .collect();

    // Serial reduction in trial order keeps the result independent of the
    // thread count.
    let count = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / count;
    let stderr = if costs.len() > 1 {
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    McEstimate {
        mean,
        stderr,
        trials,
    }
}
