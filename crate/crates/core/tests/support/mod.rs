//! Independent oracles: direct sums over the model tables, with none of the
//! solver's cached structures.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbpi_core::random::{generate_random_pomdp, random_controller};
use sbpi_core::{BeliefState, Controller, Pomdp, ValueFunction};

/// A small random model with a random stochastic controller.
pub struct Instance {
    pub pomdp: Pomdp,
    pub controller: Controller,
    pub seed: u64,
}

/// `|S| ≤ 4, |A| ≤ 3, |Z| ≤ 3, |N| ≤ 6`.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(1..=4);
    let na = rng.gen_range(1..=3);
    let nz = rng.gen_range(1..=3);
    let nn = rng.gen_range(1..=6);
    let discount = rng.gen_range(0.5..0.95);
    let pomdp = generate_random_pomdp(ns, na, nz, discount, rng.gen()).unwrap();
    let controller = random_controller(&mut rng, na, nz, nn, na, nn);
    Instance {
        pomdp,
        controller,
        seed,
    }
}

pub fn random_belief<R: Rng>(rng: &mut R, ns: usize) -> BeliefState {
    // Occasionally sparse, to reach faces of the simplex.
    let weights: Vec<f64> = (0..ns)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { -rng.gen::<f64>().max(1e-300).ln() })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return BeliefState::point(ns, rng.gen_range(0..ns));
    }
    BeliefState::from_weights(weights).unwrap()
}

/// `P(z | b, a) = Σ_s Σ_s' b(s) T(s,a,s') O(a,s',z)`.
pub fn obs_prob(p: &Pomdp, b: &BeliefState, a: usize, z: usize) -> f64 {
    let ns = p.num_states();
    let mut total = 0.0;
    for s in 0..ns {
        for s2 in 0..ns {
            total += b.probs()[s] * p.transition(s, a, s2) * p.observation(a, s2, z);
        }
    }
    total
}

/// Bayes' rule by explicit summation, or `None` if `z` is impossible.
pub fn belief_update(p: &Pomdp, b: &BeliefState, a: usize, z: usize) -> Option<Vec<f64>> {
    let ns = p.num_states();
    let pz = obs_prob(p, b, a, z);
    if pz <= 1e-12 {
        return None;
    }
    Some(
        (0..ns)
            .map(|s2| {
                let mut w = 0.0;
                for s in 0..ns {
                    w += b.probs()[s] * p.transition(s, a, s2);
                }
                w * p.observation(a, s2, z) / pz
            })
            .collect(),
    )
}

/// Controller values by repeated substitution into the evaluation equations.
pub fn fixed_point_values(c: &Controller, p: &Pomdp, iterations: usize) -> Vec<Vec<f64>> {
    let (ns, na, nz) = (p.num_states(), p.num_actions(), p.num_observations());
    let mut v = vec![vec![0.0; ns]; c.len()];
    for _ in 0..iterations {
        let mut next = vec![vec![0.0; ns]; c.len()];
        for (n, node) in c.nodes().iter().enumerate() {
            for s in 0..ns {
                let mut total = 0.0;
                for a in 0..na {
                    total += node.action_prob(a) * p.reward(s, a);
                    for z in 0..nz {
                        for (m, w) in node.successors(a, z) {
                            for s2 in 0..ns {
                                total += p.discount()
                                    * w
                                    * p.transition(s, a, s2)
                                    * p.observation(a, s2, z)
                                    * v[m][s2];
                            }
                        }
                    }
                }
                next[n][s] = total;
            }
        }
        v = next;
    }
    v
}

/// `Σ_s' T(s,a,s') O(a,s',z) V_m(s')` at belief `b`.
fn continuation(p: &Pomdp, v: &[f64], b: &BeliefState, a: usize, z: usize) -> f64 {
    let ns = p.num_states();
    let mut total = 0.0;
    for s in 0..ns {
        for s2 in 0..ns {
            total += b.probs()[s] * p.transition(s, a, s2) * p.observation(a, s2, z) * v[s2];
        }
    }
    total
}

/// Best one-step lookahead by enumerating every action and every assignment
/// of a successor node to each observation.
pub fn brute_force_backup(p: &Pomdp, v: &ValueFunction, b: &BeliefState) -> f64 {
    let (na, nz, nn) = (p.num_actions(), p.num_observations(), v.num_nodes());
    let mut best = f64::NEG_INFINITY;
    for a in 0..na {
        let immediate: f64 = (0..p.num_states()).map(|s| b.probs()[s] * p.reward(s, a)).sum();
        let mut choice = vec![0usize; nz];
        loop {
            let future: f64 = (0..nz)
                .map(|z| continuation(p, v.vector(choice[z]), b, a, z))
                .sum();
            best = best.max(immediate + p.discount() * future);
            // Odometer over successor assignments.
            let mut i = 0;
            while i < nz {
                choice[i] += 1;
                if choice[i] < nn {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == nz {
                break;
            }
        }
    }
    best
}

/// `R(s,a) + β Σ_z Σ_s' T O V` for the given node parameters, per state.
pub fn node_backup_vector(
    p: &Pomdp,
    v: &ValueFunction,
    action_probs: &std::collections::BTreeMap<usize, f64>,
    joint: &std::collections::BTreeMap<(usize, usize, usize), f64>,
) -> Vec<f64> {
    let ns = p.num_states();
    (0..ns)
        .map(|s| {
            let mut total: f64 = action_probs.iter().map(|(&a, &q)| q * p.reward(s, a)).sum();
            for (&(a, z, m), &w) in joint {
                for s2 in 0..ns {
                    total += p.discount() * w * p.transition(s, a, s2) * p.observation(a, s2, z) * v.vector(m)[s2];
                }
            }
            total
        })
        .collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
