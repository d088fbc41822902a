//! Seeded random models and controllers for tests and benchmarks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::controller::{Controller, Node};
use crate::error::{Error, Result};
use crate::pomdp::Pomdp;

/// Probability that an entry of a generated distribution is a structural zero.
const ZERO_FRACTION: f64 = 0.3;

fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|_| {
            if rng.gen_bool(ZERO_FRACTION) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect();
    if row.iter().all(|&v| v == 0.0) {
        let i = rng.gen_range(0..len);
        row[i] = 1.0;
    }
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= total);
    row
}

/// A POMDP with random sparse-ish stochastic tables and rewards in `[-1, 1]`.
/// The same arguments always produce the same model.
pub fn generate_random_pomdp(
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    discount: f64,
    seed: u64,
) -> Result<Pomdp> {
    if num_states == 0 || num_actions == 0 || num_observations == 0 {
        return Err(Error::InvalidModel("sizes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ns, na, nz) = (num_states, num_actions, num_observations);
    let mut transition = Vec::with_capacity(na * ns * ns);
    for _ in 0..na * ns {
        transition.extend(random_distribution(&mut rng, ns));
    }
    let mut observation = Vec::with_capacity(na * ns * nz);
    for _ in 0..na * ns {
        observation.extend(random_distribution(&mut rng, nz));
    }
    let reward = (0..ns * na).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Pomdp::new(ns, na, nz, transition, observation, reward, discount)
}

/// A controller of `num_nodes` stochastic nodes. Each node mixes up to
/// `max_actions` actions and, per `(a, z)`, up to `max_successors` nodes.
pub fn random_controller<R: Rng>(
    rng: &mut R,
    num_actions: usize,
    num_observations: usize,
    num_nodes: usize,
    max_actions: usize,
    max_successors: usize,
) -> Controller {
    let all_actions: Vec<usize> = (0..num_actions).collect();
    let all_nodes: Vec<usize> = (0..num_nodes).collect();
    let nodes = (0..num_nodes)
        .map(|_| {
            let k = rng.gen_range(1..=max_actions.clamp(1, num_actions));
            let actions: Vec<usize> = all_actions.choose_multiple(rng, k).copied().collect();
            let probs = random_positive(rng, k);
            let mut psi = BTreeMap::new();
            let mut w = BTreeMap::new();
            for (&a, &pa) in actions.iter().zip(&probs) {
                psi.insert(a, pa);
                for z in 0..num_observations {
                    let m = rng.gen_range(1..=max_successors.clamp(1, num_nodes));
                    let succ: Vec<usize> = all_nodes.choose_multiple(rng, m).copied().collect();
                    for (&n, &q) in succ.iter().zip(&random_positive(rng, m)) {
                        w.insert((a, z, n), pa * q);
                    }
                }
            }
            (psi, w)
        })
        .collect::<Vec<_>>();
    let mut c = Controller::from_nodes(
        num_actions,
        num_observations,
        (0..num_nodes)
            .map(|_| Node::deterministic(0, &vec![0; num_observations]))
            .collect(),
    )
    .expect("deterministic placeholder nodes are valid");
    for (i, (psi, w)) in nodes.into_iter().enumerate() {
        c.replace_node_params(i, psi, w)
            .expect("generated parameters are valid");
    }
    c
}

fn random_positive<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_model() {
        let a = generate_random_pomdp(2, 2, 2, 0.9, 7).unwrap();
        let b = generate_random_pomdp(2, 2, 2, 0.9, 7).unwrap();
        for s in 0..2 {
            for act in 0..2 {
                assert_eq!(a.reward(s, act), b.reward(s, act));
                for s2 in 0..2 {
                    assert_eq!(a.transition(s, act, s2), b.transition(s, act, s2));
                    assert_eq!(a.observation(act, s2, s), b.observation(act, s2, s));
                }
            }
        }
        let c = generate_random_pomdp(2, 2, 2, 0.9, 8).unwrap();
        assert_ne!(a.reward(0, 0), c.reward(0, 0));
    }

    #[test]
    fn rows_sum_to_one_and_rewards_bounded() {
        let p = generate_random_pomdp(3, 3, 3, 0.95, 1).unwrap();
        for a in 0..3 {
            for s in 0..3 {
                let t: f64 = (0..3).map(|s2| p.transition(s, a, s2)).sum();
                let o: f64 = p.observation_row(a, s).iter().sum();
                assert!((t - 1.0).abs() <= 1e-12);
                assert!((o - 1.0).abs() <= 1e-12);
                assert!(p.reward(s, a).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn random_controller_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_controller(&mut rng, 3, 2, 5, 2, 3);
        assert_eq!(c.len(), 5);
        for node in c.nodes() {
            assert!(node.nonzero_count() >= 1 + 2);
        }
    }
}
