//! One-step lookahead quantities shared by node-improvement LPs and backups.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::evaluation::ValueFunction;
use crate::pomdp::{BeliefState, Pomdp, ZERO_PROB};

/// Caches `G_{a,z}[s, n] = Σ_{s'} P(s'|s,a) P(z|s',a) V_n(s')` for the
/// current value function, and keeps it consistent under parallel lifts.
#[derive(Debug, Clone)]
pub struct Lookahead<'p> {
    pomdp: &'p Pomdp,
    values: ValueFunction,
    /// Index `a * |Z| + z`; `|S| × |N|`, one column per node.
    projected: Vec<DMatrix<f64>>,
    /// `P(z|s,a)` at `[a * |Z| + z][s]`.
    obs_given_state: Vec<Vec<f64>>,
}

impl<'p> Lookahead<'p> {
    pub fn new(pomdp: &'p Pomdp, values: ValueFunction) -> Lookahead<'p> {
        let (ns, na, nz) = (pomdp.num_states(), pomdp.num_actions(), pomdp.num_observations());
        let nn = values.num_nodes();
        let v = DMatrix::from_fn(ns, nn, |s, n| values.vector(n)[s]);
        let projected = (0..na * nz)
            .into_par_iter()
            .map(|az| {
                let (a, z) = (az / nz, az % nz);
                let mut weighted = v.clone();
                for s2 in 0..ns {
                    let o = pomdp.observation(a, s2, z);
                    weighted.row_mut(s2).scale_mut(o);
                }
                pomdp.transition_matrix(a) * weighted
            })
            .collect();
        let obs_given_state = (0..na * nz)
            .map(|az| {
                let (a, z) = (az / nz, az % nz);
                let t = pomdp.transition_matrix(a);
                (0..ns)
                    .map(|s| (0..ns).map(|s2| t[(s, s2)] * pomdp.observation(a, s2, z)).sum())
                    .collect()
            })
            .collect();
        Lookahead {
            pomdp,
            values,
            projected,
            obs_given_state,
        }
    }

    pub fn pomdp(&self) -> &'p Pomdp {
        self.pomdp
    }

    pub fn values(&self) -> &ValueFunction {
        &self.values
    }

    pub fn into_values(self) -> ValueFunction {
        self.values
    }

    pub fn num_nodes(&self) -> usize {
        self.values.num_nodes()
    }

    /// Raises `V_n` by `amount` everywhere.
    pub fn lift(&mut self, n: usize, amount: f64) {
        self.values.lift(n, amount);
        for (g, q) in self.projected.iter_mut().zip(&self.obs_given_state) {
            for (x, p) in g.column_mut(n).iter_mut().zip(q) {
                *x += amount * p;
            }
        }
    }

    /// `G_{a,z}[·, n]` over states.
    pub fn projected(&self, a: usize, z: usize, n: usize) -> &[f64] {
        let g = &self.projected[a * self.pomdp.num_observations() + z];
        let ns = g.nrows();
        &g.as_slice()[n * ns..(n + 1) * ns]
    }

    /// `P(z|b,a)`.
    pub fn obs_prob(&self, b: &BeliefState, a: usize, z: usize) -> f64 {
        b.dot(&self.obs_given_state[a * self.pomdp.num_observations() + z])
    }

    /// Backed-up value at `b`:
    /// `max_a R(b,a) + β Σ_z P(z|b,a) max_n b_z^a · V_n`.
    /// Observations with `P(z|b,a) <= ZERO_PROB` contribute nothing and get
    /// no successor. Ties go to the lowest action, then the lowest node.
    pub fn backup(&self, b: &BeliefState) -> BackupResult {
        let p = self.pomdp;
        let (na, nz) = (p.num_actions(), p.num_observations());
        let beta = p.discount();
        let mut best: Option<BackupResult> = None;
        for a in 0..na {
            let mut value: f64 = b
                .probs()
                .iter()
                .enumerate()
                .map(|(s, &bs)| bs * p.reward(s, a))
                .sum();
            let mut successors = vec![None; nz];
            for (z, succ) in successors.iter_mut().enumerate() {
                if self.obs_prob(b, a, z) <= ZERO_PROB {
                    continue;
                }
                let g = &self.projected[a * nz + z];
                let mut top = (f64::NEG_INFINITY, 0);
                for n in 0..g.ncols() {
                    let x = b.dot(&g.as_slice()[n * g.nrows()..(n + 1) * g.nrows()]);
                    if x > top.0 {
                        top = (x, n);
                    }
                }
                value += beta * top.0;
                *succ = Some(top.1);
            }
            if best.as_ref().map_or(true, |r| value > r.value) {
                best = Some(BackupResult {
                    value,
                    best_action: a,
                    best_successor: successors,
                });
            }
        }
        best.expect("at least one action")
    }
}

/// Result of a one-step backup at a belief.
#[derive(Debug, Clone, PartialEq)]
pub struct BackupResult {
    pub value: f64,
    pub best_action: usize,
    /// Successor node per observation; `None` where the observation is
    /// impossible after `best_action`.
    pub best_successor: Vec<Option<usize>>,
}

impl BackupResult {
    /// Successors with impossible observations routed to `fallback`.
    pub fn completed_successors(&self, fallback: usize) -> Vec<usize> {
        self.best_successor
            .iter()
            .map(|s| s.unwrap_or(fallback))
            .collect()
    }
}

/// Backup of `v` at `b` without a prebuilt [`Lookahead`].
pub fn backup_belief(p: &Pomdp, v: &ValueFunction, b: &BeliefState) -> BackupResult {
    Lookahead::new(p, v.clone()).backup(b)
}
