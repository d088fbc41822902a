//! Monte Carlo estimate of a controller's value, as a cross-check on exact
//! evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sbpi_core::{Controller, Pomdp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub rollouts: usize,
    pub horizon: usize,
    /// `R_max β^horizon / (1 − β)`: the most truncation can change the value.
    pub truncation_bias_bound: f64,
}

pub fn truncation_bias_bound(p: &Pomdp, horizon: usize) -> f64 {
    let beta = p.discount();
    p.max_abs_reward() * beta.powi(horizon.min(i32::MAX as usize) as i32) / (1.0 - beta)
}

fn sample<R: Rng>(rng: &mut R, weights: impl Iterator<Item = (usize, f64)>) -> usize {
    let weights: Vec<(usize, f64)> = weights.collect();
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

/// Discounted returns of `rollouts` trajectories of length `horizon`,
/// starting in `start_node` with the state drawn from the model's initial
/// belief. Rewards are the expected immediate rewards `R(s, a)`.
pub fn monte_carlo(
    p: &Pomdp,
    c: &Controller,
    start_node: usize,
    rollouts: usize,
    horizon: usize,
    seed: u64,
) -> MonteCarloEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, nz) = (p.num_states(), p.num_observations());
    let beta = p.discount();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..rollouts {
        let mut s = sample(&mut rng, p.start().probs().iter().copied().enumerate());
        let mut n = start_node;
        let mut discount = 1.0;
        let mut ret = 0.0;
        for _ in 0..horizon {
            let node = c.node(n);
            let a = sample(&mut rng, node.action_probs().iter().map(|(&a, &q)| (a, q)));
            ret += discount * p.reward(s, a);
            discount *= beta;
            let t = p.transition_matrix(a);
            let s_next = sample(&mut rng, (0..ns).map(|j| (j, t[(s, j)])));
            let z = sample(&mut rng, (0..nz).map(|z| (z, p.observation(a, s_next, z))));
            n = sample(&mut rng, node.successors(a, z));
            s = s_next;
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let k = rollouts.max(1) as f64;
    let mean = sum / k;
    let var = if rollouts > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    MonteCarloEstimate {
        mean,
        std_error: (var / k).sqrt(),
        rollouts,
        horizon,
        truncation_bias_bound: truncation_bias_bound(p, horizon),
    }
}
