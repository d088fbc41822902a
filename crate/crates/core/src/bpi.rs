//! Bounded policy iteration: improve nodes one at a time until no node
//! improves, then add nodes at improvable reachable beliefs, and repeat.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::controller::{Controller, SparsityStats};
use crate::error::{Error, Result};
use crate::escape::{add_nodes, escape_candidates};
use crate::evaluation::{evaluate_with, EvalMethod, EvalOptions, ValueFunction};
use crate::improve::{improve_node_full, ImprovementResult};
use crate::lookahead::Lookahead;
use crate::pomdp::Pomdp;
use crate::sparse::{improve_node_sparse, improve_node_sparse_early};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImproveMode {
    /// One LP over every parameter of the node.
    Full,
    /// Column generation, exact.
    Sparse,
    /// Column generation stopped once the gap is below the gap tolerance.
    SparseEarly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpiConfig {
    pub mode: ImproveMode,
    /// Only used by [`ImproveMode::SparseEarly`].
    pub gap_tolerance: f64,
    /// Nodes added per escape.
    pub add_k: usize,
    pub max_nodes: usize,
    pub max_outer_iterations: usize,
    /// A node counts as improved when its `ε` exceeds this.
    pub epsilon_tolerance: f64,
    /// Improvement sweeps per outer iteration before escaping anyway.
    /// Needed for discounts close to 1, where `ε` shrinks only slowly.
    pub max_sweeps_per_round: usize,
    #[serde(skip)]
    pub eval_method: EvalMethod,
}

impl Default for BpiConfig {
    fn default() -> Self {
        BpiConfig {
            mode: ImproveMode::Sparse,
            gap_tolerance: 0.0,
            add_k: 5,
            max_nodes: 300,
            max_outer_iterations: 1_000,
            epsilon_tolerance: 1e-8,
            max_sweeps_per_round: 25,
            eval_method: EvalMethod::Auto,
        }
    }
}

impl BpiConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(self.gap_tolerance >= 0.0) {
            return bad("gap tolerance must be non-negative");
        }
        if !(self.epsilon_tolerance >= 0.0) {
            return bad("epsilon tolerance must be non-negative");
        }
        if self.add_k == 0 || self.max_nodes == 0 || self.max_outer_iterations == 0 {
            return bad("add-k, max-nodes and max-iterations must be at least 1");
        }
        if self.max_sweeps_per_round == 0 {
            return bad("max sweeps per round must be at least 1");
        }
        Ok(())
    }
}

/// Improves node `n` with the given mode.
pub fn improve_node(
    mode: ImproveMode,
    gap_tolerance: f64,
    c: &Controller,
    n: usize,
    la: &Lookahead<'_>,
) -> Result<ImprovementResult> {
    match mode {
        ImproveMode::Full => improve_node_full(c, n, la),
        ImproveMode::Sparse => improve_node_sparse(c, n, la),
        ImproveMode::SparseEarly => improve_node_sparse_early(c, n, la, gap_tolerance),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl TimingSummary {
    pub fn of(samples: &[f64]) -> TimingSummary {
        if samples.is_empty() {
            return TimingSummary {
                min: 0.0,
                avg: 0.0,
                max: 0.0,
            };
        }
        TimingSummary {
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            avg: samples.iter().sum::<f64>() / samples.len() as f64,
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// One outer iteration: improvement sweeps, then node addition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Controller size during the improvement sweeps.
    pub num_nodes: usize,
    /// `V(b0)` after the sweeps, before nodes are added.
    pub value_at_b0: f64,
    pub sweeps: usize,
    /// Whether the sweep limit ended the improvement phase.
    pub sweep_limited: bool,
    pub sparsity: SparsityStats,
    pub per_node_improve_ms: TimingSummary,
    /// Node LPs solved in the sweeps (one per node per sweep in full mode).
    pub num_reduced_lps_solved: usize,
    /// Median column count of the last LP per node improvement.
    pub median_lp_variables: usize,
    /// Largest `ε` in the last sweep.
    pub last_sweep_max_epsilon: f64,
    /// Smallest change of any `V_n(s)` across a sweep and re-evaluation.
    pub min_value_change: f64,
    pub nodes_added: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// No node improves and no reachable belief is improvable.
    Converged,
    NodeCap,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct BpiOutcome {
    pub controller: Controller,
    pub values: ValueFunction,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

pub fn run_bpi(p: &Pomdp, config: &BpiConfig) -> Result<BpiOutcome> {
    run_bpi_from(p, Controller::initial(p), config, |_| {})
}

/// Runs from a given controller, reporting each finished outer iteration.
pub fn run_bpi_from(
    p: &Pomdp,
    mut c: Controller,
    config: &BpiConfig,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<BpiOutcome> {
    config.validate()?;
    let eval = |c: &Controller, warm: Option<&ValueFunction>| {
        evaluate_with(
            c,
            p,
            &EvalOptions {
                method: config.eval_method,
                warm_start: warm,
            },
        )
    };
    // Early termination treats gaps below its tolerance as converged; node
    // addition uses the same notion.
    let escape_gap = match config.mode {
        ImproveMode::SparseEarly => config.gap_tolerance,
        _ => 0.0,
    };
    let mut v = eval(&c, None)?;
    let mut trace = Vec::new();
    let mut termination = Termination::IterationCap;

    for iteration in 0..config.max_outer_iterations {
        let mut times = Vec::new();
        let mut lp_sizes = Vec::new();
        let mut lps_solved = 0;
        let mut sweeps = 0;
        let mut min_change = f64::INFINITY;
        let mut sweep_limited = false;
        let mut last_max_eps;
        let tangents = loop {
            let mut la = Lookahead::new(p, v.clone());
            let mut improved = false;
            let mut tangents = Vec::with_capacity(c.len());
            last_max_eps = f64::NEG_INFINITY;
            for n in 0..c.len() {
                let start = Instant::now();
                let r = improve_node(config.mode, config.gap_tolerance, &c, n, &la)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
                lps_solved += r.stats.lps_solved;
                lp_sizes.push(r.stats.lp_variables);
                last_max_eps = last_max_eps.max(r.epsilon);
                tangents.push(r.tangent_belief.clone());
                if r.epsilon > config.epsilon_tolerance {
                    c.replace_node_params(n, r.action_probs, r.joint_transitions)?;
                    la.lift(n, r.epsilon);
                    improved = true;
                }
            }
            sweeps += 1;
            if !improved {
                break tangents;
            }
            let next = eval(&c, Some(la.values()))?;
            for (old, new) in v.vectors().iter().zip(next.vectors()) {
                for (o, n) in old.iter().zip(new) {
                    min_change = min_change.min(n - o);
                }
            }
            v = next;
            if sweeps >= config.max_sweeps_per_round {
                sweep_limited = true;
                break tangents;
            }
        };

        lp_sizes.sort_unstable();
        let mut record = IterationRecord {
            iteration,
            num_nodes: c.len(),
            value_at_b0: v.belief_value(p.start()).0,
            sweeps,
            sweep_limited,
            sparsity: c.sparsity_stats(),
            per_node_improve_ms: TimingSummary::of(&times),
            num_reduced_lps_solved: lps_solved,
            median_lp_variables: lp_sizes.get(lp_sizes.len() / 2).copied().unwrap_or(0),
            last_sweep_max_epsilon: last_max_eps,
            min_value_change: if min_change.is_finite() { min_change } else { 0.0 },
            nodes_added: 0,
        };

        let la = Lookahead::new(p, v.clone());
        if c.len() >= config.max_nodes {
            let stuck = !sweep_limited && escape_candidates(&la, &tangents, escape_gap).is_empty();
            termination = if stuck {
                Termination::Converged
            } else {
                Termination::NodeCap
            };
            observer(&record);
            trace.push(record);
            break;
        }
        let k = config.add_k.min(config.max_nodes - c.len());
        let added = add_nodes(&mut c, &la, &tangents, k, escape_gap)?;
        record.nodes_added = added;
        observer(&record);
        trace.push(record);
        if added == 0 {
            if sweep_limited {
                continue;
            }
            termination = Termination::Converged;
            break;
        }
        v = eval(&c, Some(&v))?;
    }

    Ok(BpiOutcome {
        controller: c,
        values: v,
        trace,
        termination,
    })
}
