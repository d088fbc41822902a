//! The node-improvement LP and full-LP node improvement.
//!
//! For node `n` the LP is
//!
//! ```text
//! maximize ε
//!   ε − Σ_a ψ(a) R(s,a) − β Σ_{a,z,n'} w(a,z,n') G_{a,z}[s,n'] <= −V_n(s)   ∀s
//!   Σ_a ψ(a) = 1
//!   Σ_{n'} w(a,z,n') − ψ(a) = 0                                             ∀a,z
//!   ψ, w >= 0, ε free
//! ```
//!
//! possibly restricted to a subset of the `ψ`/`w` columns. The duals of the
//! improvement rows form the tangent belief.

use std::collections::BTreeSet;

use sbpi_lp::{BasisVar, ConstraintTag, LpModel, LpStatus, Relation, SolveOptions, VarBound};

use crate::controller::{ActionProbs, Controller, JointTransitions, Node};
use crate::error::{check_index, Error, Result};
use crate::lookahead::Lookahead;
use crate::pomdp::BeliefState;

/// Dual components more negative than this indicate a solver fault.
const DUAL_SIGN_TOL: f64 = 1e-7;

/// The columns present in a (possibly reduced) node-improvement LP.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamSet {
    actions: BTreeSet<usize>,
    transitions: BTreeSet<(usize, usize, usize)>,
}

impl ParamSet {
    /// Every `ψ(a)` and `w(a, z, n')`.
    pub fn full(num_actions: usize, num_observations: usize, num_nodes: usize) -> ParamSet {
        let mut set = ParamSet::default();
        for a in 0..num_actions {
            set.actions.insert(a);
            for z in 0..num_observations {
                for n in 0..num_nodes {
                    set.transitions.insert((a, z, n));
                }
            }
        }
        set
    }

    /// The node's currently non-zero parameters.
    pub fn from_node(node: &Node) -> ParamSet {
        ParamSet {
            actions: node.action_probs().keys().copied().collect(),
            transitions: node.joint_transitions().keys().copied().collect(),
        }
    }

    pub fn actions(&self) -> &BTreeSet<usize> {
        &self.actions
    }

    pub fn transitions(&self) -> &BTreeSet<(usize, usize, usize)> {
        &self.transitions
    }

    /// LP column count: `ε` plus one per parameter.
    pub fn num_variables(&self) -> usize {
        1 + self.actions.len() + self.transitions.len()
    }

    pub fn insert_action(&mut self, a: usize) -> bool {
        self.actions.insert(a)
    }

    pub fn insert_transition(&mut self, a: usize, z: usize, n: usize) -> bool {
        self.transitions.insert((a, z, n))
    }

    pub fn contains_transition(&self, a: usize, z: usize, n: usize) -> bool {
        self.transitions.contains(&(a, z, n))
    }

    fn has_outlet(&self, a: usize, z: usize) -> bool {
        self.transitions
            .range((a, z, 0)..=(a, z, usize::MAX))
            .next()
            .is_some()
    }

    /// Gives every `(a, z)` of an included action at least one outlet by
    /// adding `(a, z, self_node)`; returns how many entries were added.
    pub fn complete(&mut self, self_node: usize, num_observations: usize) -> usize {
        let mut added = 0;
        let actions: Vec<usize> = self.actions.iter().copied().collect();
        for a in actions {
            for z in 0..num_observations {
                if !self.has_outlet(a, z) {
                    self.transitions.insert((a, z, self_node));
                    added += 1;
                }
            }
        }
        added
    }

    pub fn validate(&self, num_actions: usize, num_observations: usize, num_nodes: usize) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::InvalidParams("parameter set has no actions".into()));
        }
        for &a in &self.actions {
            check_index("action", a, num_actions)?;
            for z in 0..num_observations {
                if !self.has_outlet(a, z) {
                    return Err(Error::InvalidParams(format!(
                        "action {a} has no transition for observation {z}"
                    )));
                }
            }
        }
        for &(a, z, n) in &self.transitions {
            if !self.actions.contains(&a) {
                return Err(Error::InvalidParams(format!(
                    "transition ({a},{z},{n}) for an excluded action"
                )));
            }
            check_index("observation", z, num_observations)?;
            check_index("successor node", n, num_nodes)?;
        }
        Ok(())
    }
}

/// A built node-improvement LP with its column map.
#[derive(Debug, Clone)]
pub struct NodeLp {
    pub model: LpModel,
    /// The free `ε` column.
    pub epsilon_column: usize,
    /// `(action, column)` in action order.
    pub action_columns: Vec<(usize, usize)>,
    /// `((a, z, n'), column)` in key order.
    pub transition_columns: Vec<((usize, usize, usize), usize)>,
    /// Rows `0..num_states` are the improvement rows.
    pub num_states: usize,
}

pub fn build_node_lp(n: usize, la: &Lookahead<'_>, params: &ParamSet) -> Result<NodeLp> {
    let p = la.pomdp();
    let (ns, nz) = (p.num_states(), p.num_observations());
    check_index("node", n, la.num_nodes())?;
    params.validate(p.num_actions(), nz, la.num_nodes())?;
    let beta = p.discount();

    let mut model = LpModel::new();
    let eps = model.add_named_variable("eps", 1.0, VarBound::Free);
    let action_columns: Vec<(usize, usize)> = params
        .actions
        .iter()
        .map(|&a| (a, model.add_variable(0.0, VarBound::NonNegative)))
        .collect();
    let transition_columns: Vec<((usize, usize, usize), usize)> = params
        .transitions
        .iter()
        .map(|&(a, z, m)| {
            ((a, z, m), model.add_variable(0.0, VarBound::NonNegative))
        })
        .collect();

    let vn = la.values().vector(n);
    for s in 0..ns {
        let mut row = Vec::with_capacity(params.num_variables());
        row.push((eps, 1.0));
        for &(a, col) in &action_columns {
            row.push((col, -p.reward(s, a)));
        }
        for &((a, z, m), col) in &transition_columns {
            row.push((col, -beta * la.projected(a, z, m)[s]));
        }
        model.add_constraint(row, Relation::Le, -vn[s], ConstraintTag::Improvement { state: s });
    }
    model.add_constraint(
        action_columns.iter().map(|&(_, col)| (col, 1.0)),
        Relation::Eq,
        1.0,
        ConstraintTag::ActionNormalization,
    );
    let mut t = 0;
    for &(a, psi_col) in &action_columns {
        for z in 0..nz {
            let mut row = Vec::new();
            while t < transition_columns.len() && transition_columns[t].0 .0 == a
                && transition_columns[t].0 .1 == z
            {
                row.push((transition_columns[t].1, 1.0));
                t += 1;
            }
            row.push((psi_col, -1.0));
            model.add_constraint(
                row,
                Relation::Eq,
                0.0,
                ConstraintTag::EtaSum {
                    action: a,
                    observation: z,
                },
            );
        }
    }
    Ok(NodeLp {
        model,
        epsilon_column: eps,
        action_columns,
        transition_columns,
        num_states: ns,
    })
}

/// Work counters for one node improvement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImprovementStats {
    pub lps_solved: usize,
    /// Column count of the last LP solved (including `ε`).
    pub lp_variables: usize,
    /// Parameters added to the initial support (sparse modes).
    pub params_added: usize,
    pub simplex_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ImprovementResult {
    pub epsilon: f64,
    pub action_probs: ActionProbs,
    pub joint_transitions: JointTransitions,
    pub tangent_belief: BeliefState,
    pub stats: ImprovementStats,
}

/// One solved node LP.
#[derive(Debug, Clone)]
pub(crate) struct LpOutcome {
    pub epsilon: f64,
    pub action_probs: ActionProbs,
    pub joint_transitions: JointTransitions,
    pub tangent_belief: BeliefState,
    pub iterations: usize,
    pub basis: Option<WarmBasis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BasisKey {
    Epsilon,
    Action(usize),
    Transition((usize, usize, usize)),
    Slack(usize),
}

/// An optimal node-LP basis named by parameter rather than column, so it
/// carries over to an LP over a larger parameter set.
#[derive(Debug, Clone)]
pub(crate) struct WarmBasis {
    actions: BTreeSet<usize>,
    entries: Vec<BasisKey>,
}

impl WarmBasis {
    fn from_solution(lp: &NodeLp, params: &ParamSet, basis: &[BasisVar]) -> Option<WarmBasis> {
        let mut keys = vec![BasisKey::Epsilon; lp.model.num_variables()];
        for &(a, col) in &lp.action_columns {
            keys[col] = BasisKey::Action(a);
        }
        for &(k, col) in &lp.transition_columns {
            keys[col] = BasisKey::Transition(k);
        }
        let entries = basis
            .iter()
            .map(|b| match *b {
                BasisVar::Structural(j) => Some(keys[j]),
                BasisVar::Slack(s) => (s < lp.num_states).then_some(BasisKey::Slack(s)),
            })
            .collect::<Option<Vec<_>>>()?;
        (entries.len() == lp.model.num_constraints()).then(|| WarmBasis {
            actions: params.actions.clone(),
            entries,
        })
    }

    /// The same basis in `lp`'s columns. Every row of a newly included
    /// action gets one of its outlets, basic at zero, which keeps the basis
    /// feasible and nonsingular.
    fn translate(&self, lp: &NodeLp, params: &ParamSet, nz: usize) -> Option<Vec<BasisVar>> {
        let action_col = |a: usize| {
            lp.action_columns
                .binary_search_by(|probe| probe.0.cmp(&a))
                .ok()
                .map(|i| lp.action_columns[i].1)
        };
        let transition_col = |k: (usize, usize, usize)| {
            lp.transition_columns
                .binary_search_by(|probe| probe.0.cmp(&k))
                .ok()
                .map(|i| lp.transition_columns[i].1)
        };
        let mut out = Vec::with_capacity(lp.model.num_constraints());
        for key in &self.entries {
            out.push(match *key {
                BasisKey::Epsilon => BasisVar::Structural(lp.epsilon_column),
                BasisKey::Action(a) => BasisVar::Structural(action_col(a)?),
                BasisKey::Transition(k) => BasisVar::Structural(transition_col(k)?),
                BasisKey::Slack(s) => BasisVar::Slack(s),
            });
        }
        for &a in params.actions.difference(&self.actions) {
            for z in 0..nz {
                let &first = params.transitions.range((a, z, 0)..=(a, z, usize::MAX)).next()?;
                out.push(BasisVar::Structural(transition_col(first)?));
            }
        }
        (out.len() == lp.model.num_constraints()).then_some(out)
    }
}

/// Improves node `n` with every parameter available.
pub fn improve_node_full(c: &Controller, n: usize, la: &Lookahead<'_>) -> Result<ImprovementResult> {
    let p = la.pomdp();
    let params = ParamSet::full(p.num_actions(), p.num_observations(), la.num_nodes());
    let out = solve_node_lp(c, n, la, &params, None)?;
    Ok(ImprovementResult {
        epsilon: out.epsilon,
        action_probs: out.action_probs,
        joint_transitions: out.joint_transitions,
        tangent_belief: out.tangent_belief,
        stats: ImprovementStats {
            lps_solved: 1,
            lp_variables: params.num_variables(),
            params_added: 0,
            simplex_iterations: out.iterations,
        },
    })
}

pub(crate) fn solve_node_lp(
    c: &Controller,
    n: usize,
    la: &Lookahead<'_>,
    params: &ParamSet,
    warm: Option<&WarmBasis>,
) -> Result<LpOutcome> {
    check_index("node", n, c.len())?;
    let lp = build_node_lp(n, la, params)?;
    let nz = la.pomdp().num_observations();
    let initial_basis = warm
        .and_then(|w| w.translate(&lp, params, nz))
        .unwrap_or_else(|| crash_basis(c.node(n), n, la, params, &lp));
    let options = SolveOptions {
        initial_basis: Some(initial_basis),
        iteration_limit: None,
    };
    let sol = sbpi_lp::solve_with(&lp.model, &options)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpStatus { node: n, status: "infeasible" }),
        LpStatus::Unbounded => return Err(Error::LpStatus { node: n, status: "unbounded" }),
    }

    let tangent_belief = tangent_from_duals(&sol.dual[..lp.num_states])?;
    let (action_probs, joint_transitions) = repair(&lp, params, n, &sol.primal)?;
    let epsilon = realized_epsilon(n, la, &action_probs, &joint_transitions);
    Ok(LpOutcome {
        epsilon,
        action_probs,
        joint_transitions,
        tangent_belief,
        iterations: sol.iterations,
        basis: WarmBasis::from_solution(&lp, params, &sol.basis),
    })
}

/// Projects an LP solution onto valid node parameters: negatives clipped,
/// `ψ` normalized, each `w(a, z, ·)` rescaled to sum to `ψ(a)`. A no-op up
/// to round-off on an accurate solution; on an ill-conditioned basis it
/// keeps small violations out of the controller.
fn repair(
    lp: &NodeLp,
    params: &ParamSet,
    n: usize,
    primal: &[f64],
) -> Result<(ActionProbs, JointTransitions)> {
    let mut psi: ActionProbs = lp
        .action_columns
        .iter()
        .map(|&(a, col)| (a, primal[col]))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    let total: f64 = psi.values().sum();
    if !(total > 0.5) {
        return Err(Error::Internal(format!(
            "node {n}: LP action probabilities sum to {total}"
        )));
    }
    psi.values_mut().for_each(|v| *v /= total);

    let mut joint = JointTransitions::new();
    let mut t = 0;
    let cols = &lp.transition_columns;
    while t < cols.len() {
        let (a, z, _) = cols[t].0;
        let start = t;
        while t < cols.len() && cols[t].0 .0 == a && cols[t].0 .1 == z {
            t += 1;
        }
        let Some(&target) = psi.get(&a) else { continue };
        let group = &cols[start..t];
        let sum: f64 = group.iter().map(|&(_, col)| primal[col].max(0.0)).sum();
        if sum > 0.0 {
            for &(k, col) in group {
                let v = primal[col];
                if v > 0.0 {
                    joint.insert(k, v * target / sum);
                }
            }
        } else {
            let k = params
                .transitions
                .range((a, z, 0)..=(a, z, usize::MAX))
                .next()
                .copied()
                .unwrap_or((a, z, n));
            joint.insert(k, target);
        }
    }
    Ok((psi, joint))
}

/// `min_s` of the improvement the given parameters achieve over `V_n(s)`.
fn realized_epsilon(
    n: usize,
    la: &Lookahead<'_>,
    psi: &ActionProbs,
    joint: &JointTransitions,
) -> f64 {
    let p = la.pomdp();
    let beta = p.discount();
    let mut backed: Vec<f64> = (0..p.num_states())
        .map(|s| psi.iter().map(|(&a, &q)| q * p.reward(s, a)).sum())
        .collect();
    for (&(a, z, m), &w) in joint {
        for (x, g) in backed.iter_mut().zip(la.projected(a, z, m)) {
            *x += beta * w * g;
        }
    }
    backed
        .iter()
        .zip(la.values().vector(n))
        .map(|(x, v)| x - v)
        .fold(f64::INFINITY, f64::min)
}

/// Normalizes the improvement-row duals into a belief, failing loudly on a
/// sign violation.
fn tangent_from_duals(duals: &[f64]) -> Result<BeliefState> {
    if let Some(d) = duals.iter().find(|d| **d < -DUAL_SIGN_TOL || !d.is_finite()) {
        return Err(Error::Internal(format!(
            "improvement-row dual {d} has the wrong sign"
        )));
    }
    let clipped: Vec<f64> = duals.iter().map(|d| d.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.5 {
        return Err(Error::Internal(format!(
            "improvement-row duals sum to {total}, expected 1"
        )));
    }
    BeliefState::from_weights(clipped)
}

/// A feasible starting basis: the deterministic node that takes the node's
/// most likely action with its most likely successors, `ε` at its largest
/// feasible value, and slacks on every improvement row but the tightest.
fn crash_basis(
    node: &Node,
    n: usize,
    la: &Lookahead<'_>,
    params: &ParamSet,
    lp: &NodeLp,
) -> Vec<BasisVar> {
    let p = la.pomdp();
    let (ns, nz) = (p.num_states(), p.num_observations());
    let beta = p.discount();

    let lead = params
        .actions
        .iter()
        .copied()
        .max_by(|&a, &b| {
            node.action_prob(a)
                .total_cmp(&node.action_prob(b))
                .then(b.cmp(&a))
        })
        .expect("validated parameter set has an action");
    let weight = |k: (usize, usize, usize)| node.joint_transitions().get(&k).copied().unwrap_or(0.0);

    let column_of = |k: (usize, usize, usize)| -> usize {
        let i = lp
            .transition_columns
            .binary_search_by(|probe| probe.0.cmp(&k))
            .expect("transition column exists");
        lp.transition_columns[i].1
    };

    let mut basis = vec![BasisVar::Structural(lp.epsilon_column)];
    let mut lead_successors = Vec::with_capacity(nz);
    for &(a, col) in &lp.action_columns {
        if a == lead {
            basis.push(BasisVar::Structural(col));
        }
        for z in 0..nz {
            let mut outlets = params.transitions.range((a, z, 0)..=(a, z, usize::MAX));
            let first = *outlets.next().expect("validated outlet");
            let pick = if a == lead {
                let best = params
                    .transitions
                    .range((a, z, 0)..=(a, z, usize::MAX))
                    .copied()
                    .fold(first, |acc, k| if weight(k) > weight(acc) { k } else { acc });
                lead_successors.push(best.2);
                best
            } else {
                first
            };
            basis.push(BasisVar::Structural(column_of(pick)));
        }
    }

    let vn = la.values().vector(n);
    let tight = (0..ns)
        .map(|s| {
            let mut v = p.reward(s, lead) - vn[s];
            for (z, &m) in lead_successors.iter().enumerate() {
                v += beta * la.projected(lead, z, m)[s];
            }
            (s, v)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map_or(0, |(s, _)| s);
    basis.extend((0..ns).filter(|&s| s != tight).map(BasisVar::Slack));
    basis
}
