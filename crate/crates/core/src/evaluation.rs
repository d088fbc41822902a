//! Exact policy evaluation and belief-value queries.
//!
//! The value of node `n` in state `s` solves
//! `V_n(s) = Σ_a ψ(a) R(s,a) + β Σ_{a,z,n'} w(a,z,n') Σ_{s'} P(s'|s,a) P(z|s',a) V_{n'}(s')`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::controller::Controller;
use crate::error::{Error, Result};
use crate::pomdp::{BeliefState, Pomdp};

/// Systems up to this many unknowns are solved by dense LU under
/// [`EvalMethod::Auto`]; larger ones iteratively.
pub const DIRECT_MAX_UNKNOWNS: usize = 1_000;

/// Dense LU is still attempted as a fallback up to this size.
const DIRECT_FALLBACK_MAX: usize = 6_000;

/// Required max-norm residual, relative to `max(1, max |rhs|)`.
const RESIDUAL_TARGET: f64 = 1e-10;

const GMRES_RESTART: usize = 60;
const GMRES_MAX_RESTARTS: usize = 60;

/// One `|S|`-vector per controller node.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    num_states: usize,
    vectors: Vec<Vec<f64>>,
}

impl ValueFunction {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<ValueFunction> {
        let num_states = vectors.first().map_or(0, Vec::len);
        if num_states == 0 || vectors.iter().any(|v| v.len() != num_states) {
            return Err(Error::InvalidParams(
                "value vectors must be non-empty and of equal length".into(),
            ));
        }
        Ok(ValueFunction {
            num_states,
            vectors,
        })
    }

    fn from_flat(num_states: usize, flat: &[f64]) -> ValueFunction {
        ValueFunction {
            num_states,
            vectors: flat.chunks(num_states).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.vectors.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn vector(&self, n: usize) -> &[f64] {
        &self.vectors[n]
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Adds `amount` to every entry of node `n`'s vector.
    pub fn lift(&mut self, n: usize, amount: f64) {
        self.vectors[n].iter_mut().for_each(|v| *v += amount);
    }

    /// `max_n b · V_n` and the maximizing node; ties go to the lowest index.
    pub fn belief_value(&self, b: &BeliefState) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (n, v) in self.vectors.iter().enumerate() {
            let x = b.dot(v);
            if x > best.0 {
                best = (x, n);
            }
        }
        best
    }

    /// The node a controller starts in for initial belief `b0`.
    pub fn start_node(&self, b0: &BeliefState) -> usize {
        self.belief_value(b0).1
    }

    fn flat(&self) -> Vec<f64> {
        self.vectors.concat()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EvalMethod {
    /// Dense LU for small systems, GMRES otherwise.
    #[default]
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions<'a> {
    pub method: EvalMethod,
    /// Initial guess for the iterative path; extra or missing nodes are
    /// ignored or started at zero.
    pub warm_start: Option<&'a ValueFunction>,
}

pub fn evaluate(c: &Controller, p: &Pomdp) -> Result<ValueFunction> {
    evaluate_with(c, p, &EvalOptions::default())
}

pub fn evaluate_with(c: &Controller, p: &Pomdp, options: &EvalOptions<'_>) -> Result<ValueFunction> {
    check_dims(c, p)?;
    let ns = p.num_states();
    let unknowns = c.len() * ns;
    let rhs = immediate_rewards(c, p);
    let scale = rhs.iter().fold(1.0f64, |m, r| m.max(r.abs()));
    let target = RESIDUAL_TARGET * scale;

    let direct = match options.method {
        EvalMethod::Direct => true,
        EvalMethod::Iterative => false,
        EvalMethod::Auto => unknowns <= DIRECT_MAX_UNKNOWNS,
    };
    let mut x = if direct {
        solve_direct(c, p, &rhs)?
    } else {
        let mut x0 = vec![0.0; unknowns];
        if let Some(w) = options.warm_start {
            for (n, v) in w.vectors.iter().enumerate().take(c.len()) {
                if v.len() == ns {
                    x0[n * ns..(n + 1) * ns].copy_from_slice(v);
                }
            }
        }
        gmres(c, p, &rhs, x0, target)
    };

    let mut residual = residual_max(c, p, &rhs, &x);
    if residual > target && !direct && unknowns <= DIRECT_FALLBACK_MAX {
        x = solve_direct(c, p, &rhs)?;
        residual = residual_max(c, p, &rhs, &x);
    }
    if residual > target {
        // One step of iterative refinement usually recovers the last digits.
        let r = residual_vector(c, p, &rhs, &x);
        let dx = if unknowns <= DIRECT_FALLBACK_MAX {
            solve_direct(c, p, &r)?
        } else {
            gmres(c, p, &r, vec![0.0; unknowns], target)
        };
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        residual = residual_max(c, p, &rhs, &x);
    }
    if !residual.is_finite() || residual > target.max(1e-9) {
        return Err(Error::Evaluation { residual });
    }
    Ok(ValueFunction::from_flat(ns, &x))
}

/// The right-hand side of the evaluation equations applied to `v`.
pub fn bellman_apply(c: &Controller, p: &Pomdp, v: &ValueFunction) -> Result<ValueFunction> {
    check_dims(c, p)?;
    if v.num_nodes() != c.len() || v.num_states() != p.num_states() {
        return Err(Error::InvalidParams("value function does not match controller".into()));
    }
    let rhs = immediate_rewards(c, p);
    let mut out = vec![0.0; rhs.len()];
    apply_continuation(c, p, &v.flat(), &mut out);
    out.iter_mut().zip(&rhs).for_each(|(o, r)| *o += r);
    Ok(ValueFunction::from_flat(p.num_states(), &out))
}

/// Max-norm distance between `v` and its one-step update.
pub fn bellman_residual(c: &Controller, p: &Pomdp, v: &ValueFunction) -> Result<f64> {
    let next = bellman_apply(c, p, v)?;
    Ok(next
        .vectors
        .iter()
        .flatten()
        .zip(v.vectors.iter().flatten())
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

fn check_dims(c: &Controller, p: &Pomdp) -> Result<()> {
    if c.num_actions() != p.num_actions() || c.num_observations() != p.num_observations() {
        return Err(Error::InvalidParams(format!(
            "controller is for {} actions / {} observations, model has {} / {}",
            c.num_actions(),
            c.num_observations(),
            p.num_actions(),
            p.num_observations()
        )));
    }
    Ok(())
}

fn immediate_rewards(c: &Controller, p: &Pomdp) -> Vec<f64> {
    let ns = p.num_states();
    let mut out = vec![0.0; c.len() * ns];
    for (n, node) in c.nodes().iter().enumerate() {
        for (&a, &pa) in node.action_probs() {
            for s in 0..ns {
                out[n * ns + s] += pa * p.reward(s, a);
            }
        }
    }
    out
}

/// `out_n = β Σ_a P_a q_a` with `q_a(s') = Σ_z P(z|s',a) Σ_{n'} w(a,z,n') x_{n'}(s')`.
fn apply_continuation(c: &Controller, p: &Pomdp, x: &[f64], out: &mut [f64]) {
    let ns = p.num_states();
    let beta = p.discount();
    out.par_chunks_mut(ns).enumerate().for_each(|(n, out_n)| {
        out_n.iter_mut().for_each(|v| *v = 0.0);
        let node = c.node(n);
        let mut q = DVector::zeros(ns);
        let mut current: Option<usize> = None;
        let flush = |a: usize, q: &mut DVector<f64>, out_n: &mut [f64]| {
            let y = p.transition_matrix(a) * &*q;
            for (o, v) in out_n.iter_mut().zip(y.iter()) {
                *o += beta * v;
            }
            q.fill(0.0);
        };
        for (&(a, z, m), &w) in node.joint_transitions() {
            if current != Some(a) {
                if let Some(prev) = current {
                    flush(prev, &mut q, out_n);
                }
                current = Some(a);
            }
            let xm = &x[m * ns..(m + 1) * ns];
            for s2 in 0..ns {
                q[s2] += w * p.observation(a, s2, z) * xm[s2];
            }
        }
        if let Some(prev) = current {
            flush(prev, &mut q, out_n);
        }
    });
}

/// `(I - βT) x`.
fn apply_system(c: &Controller, p: &Pomdp, x: &[f64], out: &mut [f64]) {
    apply_continuation(c, p, x, out);
    out.iter_mut().zip(x).for_each(|(o, xi)| *o = xi - *o);
}

fn residual_vector(c: &Controller, p: &Pomdp, rhs: &[f64], x: &[f64]) -> Vec<f64> {
    let mut ax = vec![0.0; x.len()];
    apply_system(c, p, x, &mut ax);
    rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
}

fn residual_max(c: &Controller, p: &Pomdp, rhs: &[f64], x: &[f64]) -> f64 {
    residual_vector(c, p, rhs, x)
        .iter()
        .fold(0.0, |m, r| if r.is_nan() { f64::NAN } else { m.max(r.abs()) })
}

/// `P(s'|s,a) P(z|s',a)` as an `|S|×|S|` matrix.
fn kernel(p: &Pomdp, a: usize, z: usize) -> DMatrix<f64> {
    let ns = p.num_states();
    let t = p.transition_matrix(a);
    DMatrix::from_fn(ns, ns, |s, s2| t[(s, s2)] * p.observation(a, s2, z))
}

fn solve_direct(c: &Controller, p: &Pomdp, rhs: &[f64]) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;

    let ns = p.num_states();
    let dim = c.len() * ns;
    let beta = p.discount();
    let mut k = faer::Mat::<f64>::identity(dim, dim);
    let mut kernels: Vec<Option<DMatrix<f64>>> = vec![None; p.num_actions() * p.num_observations()];
    for (n, node) in c.nodes().iter().enumerate() {
        for (&(a, z, m), &w) in node.joint_transitions() {
            let kz: &DMatrix<f64> = kernels[a * p.num_observations() + z].get_or_insert_with(|| kernel(p, a, z));
            for s2 in 0..ns {
                for s in 0..ns {
                    k[(n * ns + s, m * ns + s2)] -= beta * w * kz[(s, s2)];
                }
            }
        }
    }
    let b = faer::Mat::<f64>::from_fn(dim, 1, |i, _| rhs[i]);
    // A singular system shows up as non-finite entries, caught by the
    // caller's residual check.
    let x = k.partial_piv_lu().solve(&b);
    Ok((0..dim).map(|i| x[(i, 0)]).collect())
}

/// Block-Jacobi preconditioner built from each node's self-transitions.
struct BlockJacobi {
    ns: usize,
    blocks: Vec<Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>>,
}

impl BlockJacobi {
    fn new(c: &Controller, p: &Pomdp) -> BlockJacobi {
        let ns = p.num_states();
        let beta = p.discount();
        let blocks = (0..c.len())
            .into_par_iter()
            .map(|n| {
                let node = c.node(n);
                let mut diag_weights: Vec<(usize, Vec<f64>)> = Vec::new();
                for (&(a, z, m), &w) in node.joint_transitions() {
                    if m != n {
                        continue;
                    }
                    let weights = match diag_weights.iter_mut().find(|(b, _)| *b == a) {
                        Some((_, d)) => d,
                        None => {
                            diag_weights.push((a, vec![0.0; ns]));
                            &mut diag_weights.last_mut().unwrap().1
                        }
                    };
                    for (s2, d) in weights.iter_mut().enumerate() {
                        *d += w * p.observation(a, s2, z);
                    }
                }
                if diag_weights.is_empty() {
                    return None;
                }
                let mut block = DMatrix::<f64>::identity(ns, ns);
                for (a, d) in diag_weights {
                    let t = p.transition_matrix(a);
                    for s in 0..ns {
                        for s2 in 0..ns {
                            block[(s, s2)] -= beta * t[(s, s2)] * d[s2];
                        }
                    }
                }
                Some(block.lu())
            })
            .collect();
        BlockJacobi { ns, blocks }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        out.par_chunks_mut(self.ns)
            .zip(self.blocks.par_iter())
            .for_each(|(chunk, lu)| {
                if let Some(lu) = lu {
                    let mut v = DVector::from_column_slice(chunk);
                    if lu.solve_mut(&mut v) {
                        chunk.copy_from_slice(v.as_slice());
                    }
                }
            });
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted right-preconditioned GMRES; returns the last iterate.
fn gmres(c: &Controller, p: &Pomdp, rhs: &[f64], mut x: Vec<f64>, target: f64) -> Vec<f64> {
    let dim = x.len();
    let precond = BlockJacobi::new(c, p);
    let m = GMRES_RESTART.min(dim);
    let mut work = vec![0.0; dim];
    for _ in 0..GMRES_MAX_RESTARTS {
        let r = residual_vector(c, p, rhs, &x);
        let r_max = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if r_max <= target * 0.5 {
            break;
        }
        let beta = norm(&r);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        for j in 0..m {
            let zj = precond.apply(&basis[j]);
            apply_system(c, p, &zj, &mut work);
            let mut w = work.clone();
            for i in 0..=j {
                h[i][j] = dot(&w, &basis[i]);
                let hij = h[i][j];
                w.iter_mut().zip(&basis[i]).for_each(|(wv, bv)| *wv -= hij * bv);
            }
            let wn = norm(&w);
            h[j + 1][j] = wn;
            for i in 0..j {
                let (a, b) = (h[i][j], h[i + 1][j]);
                h[i][j] = cs[i] * a + sn[i] * b;
                h[i + 1][j] = -sn[i] * a + cs[i] * b;
            }
            let (a, b) = (h[j][j], h[j + 1][j]);
            let d = a.hypot(b);
            if d == 0.0 {
                k = j;
                break;
            }
            cs[j] = a / d;
            sn[j] = b / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k = j + 1;
            if g[j + 1].abs() <= target * 0.25 || wn <= f64::EPSILON * beta {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        if k == 0 {
            break;
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; dim];
        for (yi, vi) in y.iter().zip(&basis) {
            update.iter_mut().zip(vi).for_each(|(u, v)| *u += yi * v);
        }
        let dx = precond.apply(&update);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    }
    x
}
