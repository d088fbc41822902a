//! Paired timing of full-LP and sparse node improvement on frozen
//! controllers of increasing size.

use std::time::Instant;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use sbpi_core::bpi::{run_bpi_from, BpiConfig, ImproveMode};
use sbpi_core::improve::improve_node_full;
use sbpi_core::sparse::improve_node_sparse;
use sbpi_core::{evaluate, Controller, Lookahead, Pomdp};

use crate::report::ModelSummary;

pub const BENCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    Wall,
    /// CPU time of the calling thread.
    Cpu,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Controller sizes to measure at, ascending.
    pub ladder: Vec<usize>,
    /// Timing passes over the nodes of each frozen controller.
    pub sweeps: usize,
    /// Time only this many evenly spaced nodes per size.
    pub max_timed_nodes: Option<usize>,
    pub clock: Clock,
    /// Settings used to grow the controller between sizes.
    pub grow: BpiConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub num_nodes: usize,
    pub timed_nodes: usize,
    /// Average per-node improvement time in milliseconds.
    pub full_ms: f64,
    pub sparse_ms: f64,
    pub full_lp_variables: usize,
    /// Median column count of the last reduced LP per node.
    pub sparse_median_lp_variables: usize,
    pub sparse_avg_lps_per_node: f64,
    pub avg_nonzero: usize,
    pub total_params_per_node: usize,
    /// Largest `|ε_full − ε_sparse|` over timed nodes.
    pub max_epsilon_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub problem: String,
    pub model: ModelSummary,
    pub clock: Clock,
    pub sweeps: usize,
    pub rows: Vec<BenchRow>,
}

fn timed<T>(clock: Clock, f: impl FnOnce() -> T) -> (T, f64) {
    match clock {
        Clock::Wall => {
            let start = Instant::now();
            let out = f();
            (out, start.elapsed().as_secs_f64() * 1e3)
        }
        Clock::Cpu => {
            let start = cpu_time::ThreadTime::now();
            let out = f();
            (out, start.elapsed().as_secs_f64() * 1e3)
        }
    }
}

/// Times both improvement methods on every (or a sample of) node of a
/// frozen controller, without applying any update.
pub fn measure(p: &Pomdp, c: &Controller, config: &BenchConfig) -> Result<BenchRow> {
    let v = evaluate(c, p)?;
    let la = Lookahead::new(p, v);
    let n = c.len();
    let nodes: Vec<usize> = match config.max_timed_nodes {
        Some(m) if m > 0 && m < n => (0..m).map(|i| i * n / m).collect(),
        _ => (0..n).collect(),
    };
    let mut full_ms = 0.0;
    let mut sparse_ms = 0.0;
    let mut sparse_sizes = Vec::new();
    let mut sparse_lps = 0;
    let mut full_vars = 0;
    let mut max_diff = 0.0f64;
    for sweep in 0..config.sweeps.max(1) {
        for &node in &nodes {
            let (full, t) = timed(config.clock, || improve_node_full(c, node, &la));
            let full = full?;
            full_ms += t;
            let (sparse, t) = timed(config.clock, || improve_node_sparse(c, node, &la));
            let sparse = sparse?;
            sparse_ms += t;
            if sweep == 0 {
                full_vars = full.stats.lp_variables;
                sparse_sizes.push(sparse.stats.lp_variables);
                sparse_lps += sparse.stats.lps_solved;
                max_diff = max_diff.max((full.epsilon - sparse.epsilon).abs());
            }
        }
    }
    let samples = (nodes.len() * config.sweeps.max(1)) as f64;
    sparse_sizes.sort_unstable();
    let stats = c.sparsity_stats();
    Ok(BenchRow {
        num_nodes: n,
        timed_nodes: nodes.len(),
        full_ms: full_ms / samples,
        sparse_ms: sparse_ms / samples,
        full_lp_variables: full_vars,
        sparse_median_lp_variables: sparse_sizes[sparse_sizes.len() / 2],
        sparse_avg_lps_per_node: sparse_lps as f64 / nodes.len() as f64,
        avg_nonzero: stats.avg_nonzero,
        total_params_per_node: stats.total_params_per_node,
        max_epsilon_difference: max_diff,
    })
}

/// Grows a controller with sparse improvement through the ladder, measuring
/// at each size. A rung the controller cannot reach is measured at the size
/// it converged to.
pub fn bench_compare(
    p: &Pomdp,
    problem: &str,
    config: &BenchConfig,
    mut progress: impl FnMut(&BenchRow),
) -> Result<BenchReport> {
    let mut c = Controller::initial(p);
    let mut rows = Vec::new();
    for &target in &config.ladder {
        if c.len() < target {
            let grow = BpiConfig {
                mode: match config.grow.mode {
                    ImproveMode::Full => ImproveMode::Sparse,
                    m => m,
                },
                max_nodes: target,
                ..config.grow
            };
            c = run_bpi_from(p, c, &grow, |_| {})?.controller;
        }
        let row = measure(p, &c, config)?;
        progress(&row);
        rows.push(row);
    }
    Ok(BenchReport {
        schema_version: BENCH_SCHEMA_VERSION,
        problem: problem.to_string(),
        model: ModelSummary::of(p),
        clock: config.clock,
        sweeps: config.sweeps,
        rows,
    })
}
