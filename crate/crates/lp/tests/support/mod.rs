//! Test-only helpers: a random feasible-bounded LP generator and a brute-force
//! vertex-enumeration oracle that shares no code with the simplex.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbpi_lp::{ConstraintTag, LpModel, Relation, VarBound};

/// Random LP with at most 6 variables and 8 rows, feasible by construction
/// (rows are built around a random point) and bounded by box rows.
pub fn random_lp(seed: u64) -> LpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6);
    let mut m = LpModel::new();
    let mut point = Vec::with_capacity(n);
    let mut free_vars = Vec::new();
    for j in 0..n {
        let free = free_vars.len() < 2 && rng.gen_bool(0.2);
        let obj = rng.gen_range(-5..=5) as f64;
        m.add_variable(obj, if free { VarBound::Free } else { VarBound::NonNegative });
        if free {
            free_vars.push(j);
            point.push(rng.gen_range(-2.0..2.0));
        } else {
            point.push(rng.gen_range(0.0..2.0));
        }
    }
    let nonneg: Vec<usize> = (0..n).filter(|j| !free_vars.contains(j)).collect();
    let mut rows_left = 8;
    if !nonneg.is_empty() {
        m.add_constraint(nonneg.iter().map(|&j| (j, 1.0)), Relation::Le, 12.0, ConstraintTag::Other);
        rows_left -= 1;
    }
    for &j in &free_vars {
        m.add_constraint([(j, 1.0)], Relation::Le, 10.0, ConstraintTag::Other);
        m.add_constraint([(j, 1.0)], Relation::Ge, -10.0, ConstraintTag::Other);
        rows_left -= 2;
    }
    let extra = rng.gen_range(0..=rows_left);
    for _ in 0..extra {
        let coefs: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| {
                let a = rng.gen_range(-5..=5) as f64;
                (a != 0.0).then_some((j, a))
            })
            .collect();
        let act: f64 = coefs.iter().map(|&(j, a)| a * point[j]).sum();
        let slack = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..3.0) };
        let (rel, rhs) = match rng.gen_range(0..5) {
            0 => (Relation::Eq, act),
            1 | 2 => (Relation::Ge, act - slack),
            _ => (Relation::Le, act + slack),
        };
        m.add_constraint(coefs, rel, rhs, ConstraintTag::Other);
    }
    m
}

/// Best objective over all basic feasible solutions, or `None` if no vertex
/// is feasible.
pub fn vertex_enumeration(model: &LpModel) -> Option<f64> {
    let n = model.num_variables();
    // Every constraint as (dense row, rhs, kind) with kind: 0 eq, 1 le, 2 ge.
    let mut rows: Vec<(Vec<f64>, f64, u8)> = Vec::new();
    for c in model.constraints() {
        let mut dense = vec![0.0; n];
        for &(j, a) in &c.coefficients {
            dense[j] = a;
        }
        let kind = match c.relation {
            Relation::Eq => 0,
            Relation::Le => 1,
            Relation::Ge => 2,
        };
        rows.push((dense, c.rhs, kind));
    }
    for (j, v) in model.variables().iter().enumerate() {
        if v.bound == VarBound::NonNegative {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            rows.push((dense, 0.0, 2));
        }
    }
    let feasible = |x: &[f64]| {
        rows.iter().all(|(a, b, k)| {
            let act: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
            let tol = 1e-9 * (1.0 + b.abs());
            match k {
                0 => (act - b).abs() <= tol,
                1 => act <= b + tol,
                _ => act >= b - tol,
            }
        })
    };
    let mut best: Option<f64> = None;
    for subset in combinations(rows.len(), n) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        let Some(x) = gauss_solve(a, b) else { continue };
        if feasible(&x) {
            let obj: f64 = model
                .variables()
                .iter()
                .zip(&x)
                .map(|(v, xj)| v.objective * xj)
                .sum();
            best = Some(best.map_or(obj, |b: f64| b.max(obj)));
        }
    }
    best
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// max_i |y_i * slack_i| for the solved model.
pub fn complementary_slackness(model: &LpModel, x: &[f64], y: &[f64]) -> f64 {
    model
        .constraints()
        .iter()
        .zip(y)
        .map(|(c, yi)| (yi * (c.rhs - c.activity(x))).abs())
        .fold(0.0, f64::max)
}
