//! JSON run reports.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sbpi_core::bpi::{BpiOutcome, ImproveMode, IterationRecord, Termination};
use sbpi_core::{Pomdp, SparsityStats};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `V(b0)` may dip by at most this between outer iterations.
pub const MONOTONE_TOL: f64 = 1e-7;

/// Settings of a `solve` run, echoed into its report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem_path: String,
    pub mode: ImproveMode,
    pub gap_tolerance: f64,
    pub add_k: usize,
    pub max_nodes: usize,
    pub max_outer_iterations: usize,
    pub epsilon_tolerance: f64,
    pub max_sweeps_per_round: usize,
    pub report_path: String,
    pub save_policy_path: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_observations: usize,
    pub discount: f64,
}

impl ModelSummary {
    pub fn of(p: &Pomdp) -> ModelSummary {
        ModelSummary {
            num_states: p.num_states(),
            num_actions: p.num_actions(),
            num_observations: p.num_observations(),
            discount: p.discount(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub num_nodes: usize,
    pub value_at_b0: f64,
    pub start_node: usize,
    pub sparsity: SparsityStats,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub total_ms: f64,
    pub improve_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub model: ModelSummary,
    pub iterations: Vec<IterationRecord>,
    #[serde(rename = "final")]
    pub final_summary: FinalSummary,
    pub wall_clock: WallClock,
}

impl RunReport {
    pub fn new(config: RunConfig, p: &Pomdp, outcome: &BpiOutcome, total_ms: f64) -> RunReport {
        let (value, start) = outcome.values.belief_value(p.start());
        let improve_ms = outcome
            .trace
            .iter()
            .map(|r| r.per_node_improve_ms.avg * (r.num_nodes * r.sweeps) as f64)
            .sum();
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config,
            model: ModelSummary::of(p),
            iterations: outcome.trace.clone(),
            final_summary: FinalSummary {
                num_nodes: outcome.controller.len(),
                value_at_b0: value,
                start_node: start,
                sparsity: outcome.controller.sparsity_stats(),
                termination: outcome.termination,
            },
            wall_clock: WallClock {
                total_ms,
                improve_ms,
            },
        }
    }

    /// Node counts must never shrink and `V(b0)` must never drop.
    pub fn check_invariants(&self) -> Result<()> {
        for pair in self.iterations.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.num_nodes < a.num_nodes {
                bail!(
                    "controller shrank from {} to {} nodes at iteration {}",
                    a.num_nodes,
                    b.num_nodes,
                    b.iteration
                );
            }
            if b.value_at_b0 < a.value_at_b0 - MONOTONE_TOL {
                bail!(
                    "V(b0) dropped from {} to {} at iteration {}",
                    a.value_at_b0,
                    b.value_at_b0,
                    b.iteration
                );
            }
        }
        if let Some(last) = self.iterations.last() {
            if self.final_summary.value_at_b0 < last.value_at_b0 - MONOTONE_TOL {
                bail!("final V(b0) is below the last iteration's value");
            }
        }
        Ok(())
    }

    /// Checks the invariants, then writes pretty-printed JSON.
    pub fn write(&self, path: &Path) -> Result<()> {
        self.check_invariants()?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("writing report to {}", path.display()))
    }
}
