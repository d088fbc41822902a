//! Node improvement by column generation over the node's parameters.
//!
//! Starting from the node's current support, a reduced LP is solved; a
//! backup at its tangent belief either certifies that no missing parameter
//! can raise `ε` further, or names the action and successors to add. The
//! gap `backup(b) − b·V_n` bounds the full LP's `ε` at every belief, so the
//! loop ends with the full LP's optimum.

use crate::controller::Controller;
use crate::error::{check_index, Error, Result};
use crate::improve::{solve_node_lp, ImprovementResult, ImprovementStats, LpOutcome, ParamSet};
use crate::lookahead::Lookahead;
use crate::pomdp::BeliefState;

/// Gap (relative to `1 + |backup value|`) at which the tangent belief is
/// taken to certify optimality.
pub const GAP_TOL: f64 = 1e-9;

/// If nothing new can be added, a gap below this (same scaling) is treated
/// as LP round-off rather than an inconsistency.
const STALL_TOL: f64 = 1e-6;

/// One pass of the column-generation loop.
#[derive(Debug, Clone)]
pub struct SparseStep {
    /// Objective of this iteration's reduced LP.
    pub lp_epsilon: f64,
    /// Best `ε` so far, after this LP.
    pub threshold: f64,
    pub lp_variables: usize,
    pub tangent_belief: BeliefState,
    pub backup_value: f64,
    /// `tangent · V_n` for the unlifted vector.
    pub current_value: f64,
    /// Parameters added after this LP.
    pub added: usize,
}

impl SparseStep {
    /// `backup − tangent · V_n`, the bound on any achievable `ε` here.
    pub fn gap(&self) -> f64 {
        self.backup_value - self.current_value
    }
}

/// Column-generation improvement, exact up to LP tolerances.
pub fn improve_node_sparse(c: &Controller, n: usize, la: &Lookahead<'_>) -> Result<ImprovementResult> {
    improve_node_sparse_traced(c, n, la, 0.0).map(|(r, _)| r)
}

/// As [`improve_node_sparse`], but stops adding parameters once the
/// remaining gap drops below `gap_tolerance`; the result is then within
/// `gap_tolerance` of the full LP's `ε`.
pub fn improve_node_sparse_early(
    c: &Controller,
    n: usize,
    la: &Lookahead<'_>,
    gap_tolerance: f64,
) -> Result<ImprovementResult> {
    improve_node_sparse_traced(c, n, la, gap_tolerance).map(|(r, _)| r)
}

/// The column-generation loop, also returning one record per reduced LP.
pub fn improve_node_sparse_traced(
    c: &Controller,
    n: usize,
    la: &Lookahead<'_>,
    gap_tolerance: f64,
) -> Result<(ImprovementResult, Vec<SparseStep>)> {
    if gap_tolerance.is_nan() || gap_tolerance < 0.0 {
        return Err(Error::InvalidParams(format!(
            "gap tolerance {gap_tolerance} must be non-negative"
        )));
    }
    check_index("node", n, c.len())?;
    let p = la.pomdp();
    let (na, nz, nn) = (p.num_actions(), p.num_observations(), c.len());

    let mut params = ParamSet::from_node(c.node(n));
    let initial_size = params.num_variables();
    params.complete(n, nz);

    let max_iterations = 1 + na + na * nz * nn;
    let vn = la.values().vector(n);
    let mut steps = Vec::new();
    let mut threshold = 0.0f64;
    let mut incumbent: Option<LpOutcome> = None;
    let mut stats = ImprovementStats::default();
    let mut warm = None;

    for _ in 0..max_iterations {
        let out = solve_node_lp(c, n, la, &params, warm.as_ref())?;
        warm = out.basis.clone();
        stats.lps_solved += 1;
        stats.lp_variables = params.num_variables();
        stats.simplex_iterations += out.iterations;

        let tangent = out.tangent_belief.clone();
        let lp_epsilon = out.epsilon;
        if incumbent.is_none() || lp_epsilon > threshold {
            threshold = threshold.max(lp_epsilon);
            incumbent = Some(out);
        }

        let backup = la.backup(&tangent);
        let current_value = tangent.dot(vn);
        let excess = backup.value - current_value - threshold;
        let scale = 1.0 + backup.value.abs();
        let mut step = SparseStep {
            lp_epsilon,
            threshold,
            lp_variables: params.num_variables(),
            tangent_belief: tangent,
            backup_value: backup.value,
            current_value,
            added: 0,
        };
        if excess <= GAP_TOL * scale || excess < gap_tolerance {
            steps.push(step);
            break;
        }

        let a = backup.best_action;
        let mut added = usize::from(params.insert_action(a));
        for (z, succ) in backup.best_successor.iter().enumerate() {
            if let Some(m) = succ {
                added += usize::from(params.insert_transition(a, z, *m));
            }
        }
        added += params.complete(n, nz);
        step.added = added;
        steps.push(step);
        if added == 0 {
            if excess <= STALL_TOL * scale {
                break;
            }
            return Err(Error::Internal(format!(
                "node {n}: backup gap {excess:e} at the tangent belief but every \
                 witnessing parameter is already in the reduced LP"
            )));
        }
    }

    let best = incumbent.expect("at least one LP solved");
    stats.params_added = params.num_variables() - initial_size;
    let last_tangent = steps
        .last()
        .map(|s| s.tangent_belief.clone())
        .unwrap_or_else(|| best.tangent_belief.clone());
    Ok((
        ImprovementResult {
            epsilon: threshold,
            action_probs: best.action_probs,
            joint_transitions: best.joint_transitions,
            tangent_belief: last_tangent,
            stats,
        },
        steps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Node;
    use crate::evaluation::evaluate;
    use crate::improve::improve_node_full;
    use crate::pomdp::Pomdp;

    #[test]
    fn matches_full_on_two_action_toy() {
        let p = Pomdp::new(1, 2, 1, vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0], 0.5).unwrap();
        let c = Controller::from_nodes(2, 1, vec![Node::deterministic(0, &[0])]).unwrap();
        let la = Lookahead::new(&p, evaluate(&c, &p).unwrap());
        let full = improve_node_full(&c, 0, &la).unwrap();
        let (sparse, steps) = improve_node_sparse_traced(&c, 0, &la, 0.0).unwrap();
        assert!((full.epsilon - sparse.epsilon).abs() < 1e-9);
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].added, 2);
    }

    #[test]
    fn infinite_tolerance_stops_after_first_lp() {
        let p = Pomdp::new(1, 2, 1, vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 1.0], 0.5).unwrap();
        let c = Controller::from_nodes(2, 1, vec![Node::deterministic(0, &[0])]).unwrap();
        let la = Lookahead::new(&p, evaluate(&c, &p).unwrap());
        let r = improve_node_sparse_early(&c, 0, &la, f64::INFINITY).unwrap();
        assert_eq!(r.stats.lps_solved, 1);
        assert!(r.epsilon.abs() < 1e-12);
        assert!(improve_node_sparse_early(&c, 0, &la, -1.0).is_err());
    }
}
