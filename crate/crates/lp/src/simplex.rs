//! Bounded-below revised simplex with an explicit dense basis inverse.
//!
//! Rows are stored sparsely by column; the basis inverse is dense, which is
//! the right trade-off for programs with a few hundred rows and many
//! thousands of columns. Every inequality row gets a slack column; rows whose
//! slack cannot start basic get an artificial column for phase 1.

use crate::model::{LpModel, Relation, VarBound};
use crate::LpError;

const PIVOT_TOL: f64 = 1e-7;
const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
/// Consecutive degenerate pivots before the right-hand side is perturbed.
const PERTURB_AFTER: usize = 50;
/// Degenerate pivots after perturbation before giving up.
const CYCLE_AFTER: usize = 40 * PERTURB_AFTER;
/// Perturbation size relative to `1 + max |b|`.
const PERTURB_SCALE: f64 = 1e-7;

/// A column of the starting basis, named in terms of the original model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisVar {
    Structural(usize),
    /// The slack of an inequality row.
    Slack(usize),
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Starting basis, one entry per row. Used only if it is nonsingular and
    /// primal feasible; otherwise phase 1 runs from the slack basis.
    pub initial_basis: Option<Vec<BasisVar>>,
    /// Overrides the default `10 (rows + cols) max(rows, cols)` pivot cap.
    pub iteration_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective_value: f64,
    /// One value per model variable.
    pub primal: Vec<f64>,
    /// One multiplier per model constraint; `>= 0` on `<=` rows and `<= 0` on
    /// `>=` rows of this maximization.
    pub dual: Vec<f64>,
    pub iterations: usize,
    /// Whether the supplied starting basis was accepted.
    pub warm_started: bool,
    /// The optimal basis, one entry per row, usable as a later
    /// `initial_basis`. Empty unless optimal with no artificial left basic.
    pub basis: Vec<BasisVar>,
}

pub fn solve(model: &LpModel) -> Result<LpSolution, LpError> {
    solve_with(model, &SolveOptions::default())
}

/// Solves `model`, warm-starting from `options.initial_basis` when it is a
/// feasible basis.
///
/// A result that is not a clean optimum (an error, a non-optimal status, or
/// primal infeasibility revealed by the final refactorization) is retried
/// cold, then cold with the strict ratio test. If none is clean, the optimum
/// with the smallest row violation is returned; genuinely infeasible or
/// unbounded models cost a few re-solves.
pub fn solve_with(model: &LpModel, options: &SolveOptions) -> Result<LpSolution, LpError> {
    model.validate()?;
    if model.num_constraints() == 0 {
        return solve_unconstrained(model);
    }
    let mut attempts = Vec::with_capacity(3);
    if options.initial_basis.is_some() {
        attempts.push((true, RatioTest::Harris));
    }
    attempts.push((false, RatioTest::Harris));
    attempts.push((false, RatioTest::Strict));
    let mut best: Option<Result<LpSolution, LpError>> = None;
    for &(use_hint, ratio_test) in &attempts {
        match solve_once(model, options, use_hint, ratio_test) {
            Ok((sol, true)) => return Ok(sol),
            Ok((sol, false)) => {
                // Keep whichever unclean answer violates the rows least.
                let keep = match &best {
                    Some(Ok(prev)) => {
                        sol.status == LpStatus::Optimal
                            && (prev.status != LpStatus::Optimal
                                || model.primal_residual(&sol.primal)
                                    < model.primal_residual(&prev.primal))
                    }
                    _ => true,
                };
                if keep {
                    best = Some(Ok(sol));
                }
            }
            Err(e) => {
                if !matches!(best, Some(Ok(_))) {
                    best = Some(Err(e));
                }
            }
        }
    }
    best.expect("at least one attempt")
}

/// Harris' two-pass test tolerates basic values down to `-FEAS_TOL`; a
/// later small pivot can amplify that. The textbook test never does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RatioTest {
    Harris,
    Strict,
}

/// One simplex run; the flag says whether it ended at a clean optimum.
fn solve_once(
    model: &LpModel,
    options: &SolveOptions,
    use_hint: bool,
    ratio_test: RatioTest,
) -> Result<(LpSolution, bool), LpError> {
    let n = model.num_variables();
    let m = model.num_constraints();
    let limit = options
        .iteration_limit
        .unwrap_or_else(|| 10 * (m + n) * m.max(n).max(1));

    let mut simplex = Simplex::new(model, limit, ratio_test);
    let mut warm_started = false;
    if let (true, Some(hint)) = (use_hint, &options.initial_basis) {
        warm_started = simplex.try_warm_start(hint);
    }
    if !warm_started {
        simplex.start_phase_one();
        let cost = simplex.phase_one_cost();
        match simplex.optimize(&cost, true)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase 1 objective is bounded above by 0"),
        }
        let infeasibility: f64 = simplex
            .basis
            .iter()
            .zip(&simplex.x_b)
            .filter(|(&col, _)| simplex.is_artificial(col))
            .map(|(_, &x)| x.max(0.0))
            .sum();
        let scale = 1.0 + simplex.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if infeasibility > 1e-8 * scale {
            let sol = LpSolution {
                status: LpStatus::Infeasible,
                objective_value: f64::NEG_INFINITY,
                primal: vec![0.0; n],
                dual: vec![0.0; m],
                iterations: simplex.iterations,
                warm_started: false,
                basis: Vec::new(),
            };
            return Ok((sol, false));
        }
        simplex.drive_out_artificials()?;
    }

    let cost = simplex.phase_two_cost(model);
    let mut outcome = simplex.optimize(&cost, false)?;
    if outcome == Outcome::Optimal && simplex.since_refactor > 0 && !simplex.is_primal_feasible() {
        // Drift in the updated inverse: polish on a fresh factorization.
        simplex.refactor()?;
        outcome = simplex.optimize(&cost, false)?;
    }
    let clean = outcome == Outcome::Optimal && simplex.is_primal_feasible();

    let primal = simplex.structural_values(n);
    match outcome {
        Outcome::Unbounded => Ok((
            LpSolution {
                status: LpStatus::Unbounded,
                objective_value: f64::INFINITY,
                primal,
                dual: vec![0.0; m],
                iterations: simplex.iterations,
                warm_started,
                basis: Vec::new(),
            },
            false,
        )),
        Outcome::Optimal => {
            let y = simplex.duals(&cost);
            let dual = y
                .iter()
                .zip(&simplex.row_sign)
                .map(|(yi, s)| yi * s)
                .collect();
            Ok((
                LpSolution {
                    status: LpStatus::Optimal,
                    objective_value: model.objective_value(&primal),
                    primal,
                    dual,
                    iterations: simplex.iterations,
                    warm_started,
                    basis: simplex.external_basis(n),
                },
                clean,
            ))
        }
    }
}

fn solve_unconstrained(model: &LpModel) -> Result<LpSolution, LpError> {
    let n = model.num_variables();
    let unbounded = model.variables().iter().any(|v| match v.bound {
        VarBound::NonNegative => v.objective > OPT_TOL,
        VarBound::Free => v.objective.abs() > OPT_TOL,
    });
    Ok(LpSolution {
        status: if unbounded {
            LpStatus::Unbounded
        } else {
            LpStatus::Optimal
        },
        objective_value: if unbounded { f64::INFINITY } else { 0.0 },
        primal: vec![0.0; n],
        dual: Vec::new(),
        iterations: 0,
        warm_started: false,
        basis: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Simplex {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    kind: Vec<ColKind>,
    free: Vec<bool>,
    slack_of_row: Vec<Option<usize>>,
    b: Vec<f64>,
    row_sign: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    x_b: Vec<f64>,
    iterations: usize,
    limit: usize,
    since_refactor: usize,
    ratio_test: RatioTest,
    /// The unperturbed right-hand side while a perturbation is active.
    b_orig: Option<Vec<f64>>,
}

impl Simplex {
    fn new(model: &LpModel, limit: usize, ratio_test: RatioTest) -> Self {
        let m = model.num_constraints();
        let n = model.num_variables();
        let row_sign: Vec<f64> = model
            .constraints()
            .iter()
            .map(|r| if r.rhs < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let b = model
            .constraints()
            .iter()
            .zip(&row_sign)
            .map(|(r, s)| r.rhs * s)
            .collect();

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in model.constraints().iter().enumerate() {
            for &(j, a) in &row.coefficients {
                cols[j].push((i, a * row_sign[i]));
            }
        }
        let mut kind = vec![ColKind::Structural; n];
        let mut free: Vec<bool> = model
            .variables()
            .iter()
            .map(|v| v.bound == VarBound::Free)
            .collect();
        let mut slack_of_row = vec![None; m];
        for (i, row) in model.constraints().iter().enumerate() {
            let coef = match row.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => continue,
            };
            slack_of_row[i] = Some(cols.len());
            cols.push(vec![(i, coef * row_sign[i])]);
            kind.push(ColKind::Slack);
            free.push(false);
        }
        let total = cols.len();
        Simplex {
            m,
            cols,
            kind,
            free,
            slack_of_row,
            b,
            row_sign,
            basis: Vec::new(),
            position: vec![None; total],
            binv: Vec::new(),
            x_b: Vec::new(),
            iterations: 0,
            limit,
            since_refactor: 0,
            ratio_test,
            b_orig: None,
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        self.kind[col] == ColKind::Artificial
    }

    fn set_basis(&mut self, basis: Vec<usize>) {
        self.position = vec![None; self.cols.len()];
        for (i, &c) in basis.iter().enumerate() {
            self.position[c] = Some(i);
        }
        self.basis = basis;
    }

    fn try_warm_start(&mut self, hint: &[BasisVar]) -> bool {
        if hint.len() != self.m {
            return false;
        }
        let n_structural = self.kind.iter().filter(|k| **k == ColKind::Structural).count();
        let mut basis = Vec::with_capacity(self.m);
        let mut seen = vec![false; self.cols.len()];
        for h in hint {
            let col = match *h {
                BasisVar::Structural(j) if j < n_structural => j,
                BasisVar::Slack(i) if i < self.m => match self.slack_of_row[i] {
                    Some(c) => c,
                    None => return false,
                },
                _ => return false,
            };
            if seen[col] {
                return false;
            }
            seen[col] = true;
            basis.push(col);
        }
        self.set_basis(basis);
        if self.refactor().is_err() {
            return false;
        }
        if !self.is_primal_feasible() {
            self.basis.clear();
            return false;
        }
        true
    }

    /// The basis in model terms, or empty if an artificial is still basic.
    fn external_basis(&self, n: usize) -> Vec<BasisVar> {
        let mut out = Vec::with_capacity(self.m);
        for &col in &self.basis {
            match self.kind[col] {
                ColKind::Structural => out.push(BasisVar::Structural(col)),
                ColKind::Slack => {
                    let row = self.cols[col][0].0;
                    debug_assert_eq!(self.slack_of_row[row], Some(col));
                    out.push(BasisVar::Slack(row));
                }
                ColKind::Artificial => return Vec::new(),
            }
        }
        debug_assert!(out.iter().all(|b| !matches!(b, BasisVar::Structural(j) if *j >= n)));
        out
    }

    fn is_primal_feasible(&self) -> bool {
        let scale = 1.0 + self.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        self.basic_residual().iter().all(|r| r.abs() <= FEAS_TOL * scale)
            && self.basis
            .iter()
            .zip(&self.x_b)
            .all(|(&c, &x)| self.free[c] || x >= -FEAS_TOL * scale)
    }

    fn start_phase_one(&mut self) {
        let mut basis = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let slack_ok = self.slack_of_row[i]
                .map(|c| self.cols[c][0].1 > 0.0)
                .unwrap_or(false);
            if slack_ok {
                basis.push(self.slack_of_row[i].unwrap());
            } else {
                self.cols.push(vec![(i, 1.0)]);
                self.kind.push(ColKind::Artificial);
                self.free.push(false);
                basis.push(self.cols.len() - 1);
            }
        }
        self.set_basis(basis);
        // Slack/artificial basis is the identity.
        let m = self.m;
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = 1.0;
        }
        self.x_b = self.b.clone();
        self.since_refactor = 0;
    }

    fn phase_one_cost(&self) -> Vec<f64> {
        self.kind
            .iter()
            .map(|k| if *k == ColKind::Artificial { -1.0 } else { 0.0 })
            .collect()
    }

    fn phase_two_cost(&self, model: &LpModel) -> Vec<f64> {
        let mut cost = vec![0.0; self.cols.len()];
        for (j, v) in model.variables().iter().enumerate() {
            cost[j] = v.objective;
        }
        cost
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting and recomputes the basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (k, &col) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[col] {
                a[i * m + k] = v;
            }
        }
        let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut piv = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < SINGULAR_TOL * scale {
                return Err(LpError::SingularBasis);
            }
            if piv != c {
                for k in 0..m {
                    a.swap(c * m + k, piv * m + k);
                    inv.swap(c * m + k, piv * m + k);
                }
            }
            // Bases are mostly slack columns: only touch the pivot row's
            // non-zeros. Columns left of `c` are already eliminated.
            let d = a[c * m + c];
            let a_nz: Vec<usize> = (c..m).filter(|&k| a[c * m + k] != 0.0).collect();
            let inv_nz: Vec<usize> = (0..m).filter(|&k| inv[c * m + k] != 0.0).collect();
            for &k in &a_nz {
                a[c * m + k] /= d;
            }
            for &k in &inv_nz {
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for &k in &a_nz {
                    a[r * m + k] -= f * a[c * m + k];
                }
                for &k in &inv_nz {
                    inv[r * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;
        self.x_b = (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * self.b[k]).sum())
            .collect();
        // The explicit inverse loses digits on ill-conditioned bases; a few
        // refinement steps against the original columns recover them.
        for _ in 0..3 {
            let r = self.basic_residual();
            if r.iter().all(|v| v.abs() <= 1e-15 * (1.0 + scale)) {
                break;
            }
            for i in 0..m {
                let row = &self.binv[i * m..(i + 1) * m];
                self.x_b[i] += row.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// `b − B x_B` for the current basis.
    fn basic_residual(&self) -> Vec<f64> {
        let mut r = self.b.clone();
        for (k, &col) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[col] {
                r[i] -= v * self.x_b[k];
            }
        }
        r
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &col) in self.basis.iter().enumerate() {
            let cb = cost[col];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (yr, &v) in y.iter_mut().zip(row) {
                *yr += cb * v;
            }
        }
        y
    }

    fn column_direction(&self, col: usize) -> Vec<f64> {
        let m = self.m;
        let entries = &self.cols[col];
        self.binv
            .chunks_exact(m)
            .map(|row| entries.iter().map(|&(r, v)| row[r] * v).sum())
            .collect()
    }

    fn pivot(&mut self, p: usize, entering: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[p];
        for k in 0..m {
            self.binv[p * m + k] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(p * m);
        let (prow, after) = rest.split_at_mut(m);
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (x, &pv) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pv;
                }
            }
        }
        for (off, row) in after.chunks_mut(m).enumerate() {
            let f = alpha[p + 1 + off];
            if f != 0.0 {
                for (x, &pv) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pv;
                }
            }
        }
        let leaving = self.basis[p];
        self.position[leaving] = None;
        self.position[entering] = Some(p);
        self.basis[p] = entering;
        self.since_refactor += 1;
    }

    fn optimize(&mut self, cost: &[f64], allow_artificial: bool) -> Result<Outcome, LpError> {
        let outcome = self.primal_loop(cost, allow_artificial);
        if self.b_orig.is_some() {
            self.remove_perturbation()?;
            if outcome.as_ref().is_ok_and(|o| *o == Outcome::Optimal) && !self.is_primal_feasible() {
                // The perturbed optimum stays dual feasible; a few dual
                // pivots restore primal feasibility, then primal finishes.
                self.dual_cleanup(cost, allow_artificial)?;
                return self.primal_loop(cost, allow_artificial);
            }
        }
        outcome
    }

    /// Dantzig pricing with the configured ratio test. A long degenerate run
    /// perturbs the right-hand side once; the caller removes it.
    fn primal_loop(&mut self, cost: &[f64], allow_artificial: bool) -> Result<Outcome, LpError> {
        let m = self.m;
        let mut degenerate_run = 0usize;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            if degenerate_run >= PERTURB_AFTER && self.b_orig.is_none() {
                self.perturb()?;
                degenerate_run = 0;
            }
            if degenerate_run >= CYCLE_AFTER {
                return Err(LpError::Cycling { pivots: degenerate_run });
            }
            let y = self.duals(cost);

            let mut entering: Option<(usize, f64, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() {
                    continue;
                }
                if self.kind[j] == ColKind::Artificial && !allow_artificial {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>();
                let (score, dir) = if self.free[j] {
                    (d.abs(), d.signum())
                } else {
                    (d, 1.0)
                };
                if score > OPT_TOL && score > best {
                    best = score;
                    entering = Some((j, dir, score));
                }
            }
            let Some((q, dir, gain_rate)) = entering else {
                return Ok(Outcome::Optimal);
            };

            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit {
                    limit: self.limit,
                    best_primal: if allow_artificial {
                        None
                    } else {
                        Some(self.structural_values(
                            self.kind.iter().filter(|k| **k == ColKind::Structural).count(),
                        ))
                    },
                });
            }

            let alpha = self.column_direction(q);
            // (rate of decrease, current value) for each row that can block.
            let blocking = |i: usize| -> Option<(f64, f64)> {
                let col = self.basis[i];
                if self.free[col] {
                    return None;
                }
                let a = dir * alpha[i];
                if self.kind[col] == ColKind::Artificial && !allow_artificial {
                    return (a.abs() > PIVOT_TOL).then_some((a.abs(), 0.0));
                }
                (a > PIVOT_TOL).then(|| (a, self.x_b[i].max(0.0)))
            };

            let mut leave: Option<usize> = None;
            if self.ratio_test == RatioTest::Strict {
                let mut min_ratio = f64::INFINITY;
                for i in 0..m {
                    if let Some((a, x)) = blocking(i) {
                        min_ratio = min_ratio.min(x / a);
                    }
                }
                // Among ties, the largest pivot.
                let mut best_a = 0.0;
                for i in 0..m {
                    if let Some((a, x)) = blocking(i) {
                        if x / a <= min_ratio + 1e-12 && a > best_a {
                            best_a = a;
                            leave = Some(i);
                        }
                    }
                }
            } else {
                // Harris two-pass: relax the bound, then take the largest pivot.
                let mut theta = f64::INFINITY;
                for i in 0..m {
                    if let Some((a, x)) = blocking(i) {
                        theta = theta.min((x + FEAS_TOL) / a);
                    }
                }
                let mut best_a = 0.0;
                for i in 0..m {
                    if let Some((a, x)) = blocking(i) {
                        if x / a <= theta && a > best_a {
                            best_a = a;
                            leave = Some(i);
                        }
                    }
                }
            }
            let Some(p) = leave else {
                return Ok(Outcome::Unbounded);
            };
            let (a_p, x_p) = blocking(p).expect("leaving row blocks");
            let step = x_p / a_p;

            for (x, &a) in self.x_b.iter_mut().zip(&alpha) {
                *x -= step * dir * a;
            }
            self.x_b[p] = dir * step;
            self.pivot(p, q, &alpha);
            self.iterations += 1;
            // Progress is measured in objective gain: tiny non-zero steps
            // can otherwise sustain a cycle indefinitely.
            if step * gain_rate <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }

    /// Raises every bounded, non-artificial basic value by a distinct small
    /// amount and moves `b` to match, which breaks ties in the ratio test.
    fn perturb(&mut self) -> Result<(), LpError> {
        let scale = 1.0 + self.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let mut state = 0x9e37_79b9_7f4a_7c15_u64;
        let mut b = self.b.clone();
        for &col in &self.basis {
            // xorshift: reproducible without an RNG dependency.
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if self.free[col] || self.kind[col] == ColKind::Artificial {
                continue;
            }
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let delta = PERTURB_SCALE * scale * (1.0 + u);
            for &(i, v) in &self.cols[col] {
                b[i] += v * delta;
            }
        }
        self.b_orig = Some(std::mem::replace(&mut self.b, b));
        self.refactor()
    }

    fn remove_perturbation(&mut self) -> Result<(), LpError> {
        if let Some(b) = self.b_orig.take() {
            self.b = b;
            self.refactor()?;
        }
        Ok(())
    }

    /// Dual simplex pivots from a dual-feasible basis until no basic value
    /// is below `-FEAS_TOL`. Stops early, leaving the basis infeasible, if no
    /// entering column exists; the caller's feasibility check catches that.
    fn dual_cleanup(&mut self, cost: &[f64], allow_artificial: bool) -> Result<(), LpError> {
        let m = self.m;
        let scale = 1.0 + self.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let leaving = (0..m)
                .filter(|&i| !self.free[self.basis[i]] && self.x_b[i] < -FEAS_TOL * scale)
                .min_by(|&i, &k| self.x_b[i].total_cmp(&self.x_b[k]));
            let Some(r) = leaving else {
                return Ok(());
            };
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit { limit: self.limit, best_primal: None });
            }
            let rho = &self.binv[r * m..(r + 1) * m];
            let y = self.duals(cost);
            // Entering: keeps reduced costs dual feasible (smallest ratio),
            // preferring large pivots among near-ties.
            let mut entering: Option<(usize, f64, f64, f64)> = None;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() {
                    continue;
                }
                if self.kind[j] == ColKind::Artificial && !allow_artificial {
                    continue;
                }
                let a_rj: f64 = self.cols[j].iter().map(|&(i, v)| rho[i] * v).sum();
                let dir = if self.free[j] {
                    -a_rj.signum()
                } else if a_rj < 0.0 {
                    1.0
                } else {
                    continue;
                };
                let pivot = a_rj.abs();
                if pivot <= PIVOT_TOL {
                    continue;
                }
                let d = cost[j] - self.cols[j].iter().map(|&(i, v)| y[i] * v).sum::<f64>();
                let ratio = (dir * d).min(0.0).abs() / pivot;
                let better = match entering {
                    None => true,
                    Some((_, _, best_ratio, best_pivot)) => {
                        ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && pivot > best_pivot)
                    }
                };
                if better {
                    entering = Some((j, dir, ratio, pivot));
                }
            }
            let Some((q, dir, _, _)) = entering else {
                return Ok(());
            };
            let alpha = self.column_direction(q);
            let step = self.x_b[r] / (dir * alpha[r]);
            for (x, &a) in self.x_b.iter_mut().zip(&alpha) {
                *x -= step * dir * a;
            }
            self.x_b[r] = dir * step;
            self.pivot(r, q, &alpha);
            self.iterations += 1;
        }
    }

    /// Pivots basic artificials (at zero after a feasible phase 1) out of the
    /// basis. Rows where no replacement exists are redundant and keep theirs.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let m = self.m;
        for p in 0..m {
            if !self.is_artificial(self.basis[p]) {
                continue;
            }
            let row = self.binv[p * m..(p + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.cols.len() {
                if self.position[j].is_some() || self.is_artificial(j) {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(r, a)| row[r] * a).sum();
                if v.abs() > 1e-7 && best.map_or(true, |(_, bv)| v.abs() > bv.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.column_direction(q);
                self.x_b[p] = 0.0;
                self.pivot(p, q, &alpha);
            }
        }
        self.refactor()
    }

    fn structural_values(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &col) in self.basis.iter().enumerate() {
            if col < n {
                x[col] = self.x_b[i];
            }
        }
        x
    }
}
