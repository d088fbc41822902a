//! Argument parsing and subcommand dispatch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sbpi_core::bpi::{run_bpi_from, BpiConfig, ImproveMode, Termination};
use sbpi_core::improve::{build_node_lp, ParamSet};
use sbpi_core::random::generate_random_pomdp;
use sbpi_core::{evaluate, parse_pomdp, write_pomdp, Controller, Lookahead, Pomdp};

use crate::bench::{bench_compare, BenchConfig, Clock};
use crate::report::{RunConfig, RunReport};
use crate::simulate::monte_carlo;

#[derive(Debug, Parser)]
#[command(name = "sbpi", version, about = "Bounded policy iteration for POMDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow and improve a controller, writing a JSON report.
    Solve(SolveArgs),
    /// Time full-LP against sparse node improvement at several controller sizes.
    BenchCompare(BenchArgs),
    /// Exact and Monte Carlo value of a saved policy.
    Eval(EvalArgs),
    /// Write a random problem file.
    Gen(GenArgs),
    /// Write a node-improvement LP in CPLEX LP format.
    DumpLp(DumpLpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Sparse,
    SparseEarly,
}

impl From<ModeArg> for ImproveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => ImproveMode::Full,
            ModeArg::Sparse => ImproveMode::Sparse,
            ModeArg::SparseEarly => ImproveMode::SparseEarly,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "sparse", env = "SBPI_MODE")]
    pub mode: ModeArg,
    /// Gap at which sparse-early stops adding parameters.
    #[arg(long, default_value_t = 0.0, env = "SBPI_GAP_TOLERANCE")]
    pub gap_tolerance: f64,
    /// Nodes added when the controller is stuck.
    #[arg(long, default_value_t = 5, env = "SBPI_ADD_K")]
    pub add_k: usize,
    #[arg(long, default_value_t = 300, env = "SBPI_MAX_NODES")]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 1000, env = "SBPI_MAX_ITERATIONS")]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-8, env = "SBPI_EPSILON_TOLERANCE")]
    pub epsilon_tolerance: f64,
    /// Improvement sweeps per outer iteration before adding nodes anyway.
    #[arg(long, default_value_t = 25, env = "SBPI_MAX_SWEEPS")]
    pub max_sweeps: usize,
}

impl SolverArgs {
    pub fn config(&self) -> BpiConfig {
        BpiConfig {
            mode: self.mode.into(),
            gap_tolerance: self.gap_tolerance,
            add_k: self.add_k,
            max_nodes: self.max_nodes,
            max_outer_iterations: self.max_iterations,
            epsilon_tolerance: self.epsilon_tolerance,
            max_sweeps_per_round: self.max_sweeps,
            ..BpiConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem file; `random:S,A,Z[,discount]` generates one from `--seed`.
    pub problem: String,
    #[arg(long, default_value_t = 0, env = "SBPI_SEED")]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "report.json", env = "SBPI_REPORT")]
    pub report: PathBuf,
    #[arg(long, env = "SBPI_SAVE_POLICY")]
    pub save_policy: Option<PathBuf>,
    /// Suppress per-iteration progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Controller sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50,100,150")]
    pub ladder: Vec<usize>,
    /// Timing passes per size.
    #[arg(long, default_value_t = 3, env = "SBPI_BENCH_SWEEPS")]
    pub sweeps: usize,
    /// Time only this many evenly spaced nodes per size.
    #[arg(long)]
    pub max_timed_nodes: Option<usize>,
    #[arg(long, value_enum, default_value = "wall")]
    pub clock: Clock,
    #[arg(long, default_value = "bench.json", env = "SBPI_REPORT")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Policy written by `solve --save-policy`.
    pub policy: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub rollouts: usize,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub states: usize,
    #[arg(long)]
    pub actions: usize,
    #[arg(long)]
    pub observations: usize,
    #[arg(long, default_value_t = 0.95)]
    pub discount: f64,
    #[arg(long, default_value_t = 0, env = "SBPI_SEED")]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DumpLpArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Controller to use; the initial controller if omitted.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub node: usize,
    #[arg(long, short)]
    pub output: PathBuf,
}

/// Loads a problem file, or generates one for `random:S,A,Z[,discount]`.
pub fn load_problem(spec: &str, seed: u64) -> Result<Pomdp> {
    if let Some(dims) = spec.strip_prefix("random:") {
        let parts: Vec<&str> = dims.split(',').collect();
        if parts.len() != 3 && parts.len() != 4 {
            bail!("expected random:S,A,Z[,discount], got '{spec}'");
        }
        let num = |s: &str| s.trim().parse::<usize>().with_context(|| format!("bad size '{s}'"));
        let discount = match parts.get(3) {
            Some(d) => d.trim().parse::<f64>().with_context(|| format!("bad discount '{d}'"))?,
            None => 0.95,
        };
        return Ok(generate_random_pomdp(num(parts[0])?, num(parts[1])?, num(parts[2])?, discount, seed)?);
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
    match parse_pomdp(&text) {
        Ok(parsed) => {
            for w in &parsed.warnings {
                eprintln!("{spec}: {w}");
            }
            Ok(parsed.pomdp)
        }
        Err(diags) => {
            for d in &diags {
                eprintln!("{spec}: {d}");
            }
            Err(anyhow!("could not parse {spec}"))
        }
    }
}

fn load_policy(path: &Path, p: &Pomdp) -> Result<Controller> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Controller::from_policy_json(&text, p.num_actions(), p.num_observations())?)
}

/// Runs a command, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::BenchCompare(args) => cmd_bench_compare(&args).map(|_| 0),
        Command::Eval(args) => cmd_eval(&args).map(|_| 0),
        Command::Gen(args) => cmd_gen(&args).map(|_| 0),
        Command::DumpLp(args) => cmd_dump_lp(&args).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// 0 on convergence, 2 if a cap stopped the run.
pub fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let p = load_problem(&args.problem.problem, args.problem.seed)?;
    let config = args.solver.config();
    let run_config = RunConfig {
        problem_path: args.problem.problem.clone(),
        mode: config.mode,
        gap_tolerance: config.gap_tolerance,
        add_k: config.add_k,
        max_nodes: config.max_nodes,
        max_outer_iterations: config.max_outer_iterations,
        epsilon_tolerance: config.epsilon_tolerance,
        max_sweeps_per_round: config.max_sweeps_per_round,
        report_path: args.report.display().to_string(),
        save_policy_path: args.save_policy.as_ref().map(|p| p.display().to_string()),
        seed: args.problem.seed,
    };
    let start = Instant::now();
    let quiet = args.quiet;
    let outcome = run_bpi_from(&p, Controller::initial(&p), &config, |r| {
        if !quiet {
            eprintln!(
                "iter {:>4}  nodes {:>4}  V(b0) {:>14.6}  sweeps {:>3}  avg-nz {:>5}  ms/node {:>9.3}  added {}",
                r.iteration,
                r.num_nodes,
                r.value_at_b0,
                r.sweeps,
                r.sparsity.avg_nonzero,
                r.per_node_improve_ms.avg,
                r.nodes_added
            );
        }
    })?;
    let total_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = RunReport::new(run_config, &p, &outcome, total_ms);
    report.write(&args.report)?;
    if let Some(path) = &args.save_policy {
        std::fs::write(path, outcome.controller.to_policy_json() + "\n")
            .with_context(|| format!("writing policy to {}", path.display()))?;
    }
    if !quiet {
        eprintln!(
            "{:?}: {} nodes, V(b0) = {}",
            outcome.termination, report.final_summary.num_nodes, report.final_summary.value_at_b0
        );
    }
    Ok(match outcome.termination {
        Termination::Converged => 0,
        Termination::NodeCap | Termination::IterationCap => 2,
    })
}

pub fn cmd_bench_compare(args: &BenchArgs) -> Result<()> {
    let p = load_problem(&args.problem.problem, args.problem.seed)?;
    let mut ladder = args.ladder.clone();
    ladder.sort_unstable();
    ladder.dedup();
    let config = BenchConfig {
        ladder,
        sweeps: args.sweeps,
        max_timed_nodes: args.max_timed_nodes,
        clock: args.clock,
        grow: args.solver.config(),
    };
    let report = bench_compare(&p, &args.problem.problem, &config, |row| {
        eprintln!(
            "N {:>4}  full {:>10.3} ms ({} vars)  sparse {:>8.3} ms (median {} vars, {:.2} LPs)  avg-nz {}",
            row.num_nodes,
            row.full_ms,
            row.full_lp_variables,
            row.sparse_ms,
            row.sparse_median_lp_variables,
            row.sparse_avg_lps_per_node,
            row.avg_nonzero
        );
    })?;
    std::fs::write(&args.report, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", args.report.display()))?;
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let p = load_problem(&args.problem.problem, args.problem.seed)?;
    let c = load_policy(&args.policy, &p)?;
    let v = evaluate(&c, &p)?;
    let (exact, start_node) = v.belief_value(p.start());
    let mc = monte_carlo(&p, &c, start_node, args.rollouts, args.horizon, args.problem.seed);
    let out = json!({
        "exact_value": exact,
        "start_node": start_node,
        "monte_carlo": mc,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let p = generate_random_pomdp(args.states, args.actions, args.observations, args.discount, args.seed)?;
    std::fs::write(&args.output, write_pomdp(&p))
        .with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

pub fn cmd_dump_lp(args: &DumpLpArgs) -> Result<()> {
    let p = load_problem(&args.problem.problem, args.problem.seed)?;
    let c = match &args.policy {
        Some(path) => load_policy(path, &p)?,
        None => Controller::initial(&p),
    };
    if args.node >= c.len() {
        bail!("node {} out of range ({} nodes)", args.node, c.len());
    }
    let la = Lookahead::new(&p, evaluate(&c, &p)?);
    let params = ParamSet::full(p.num_actions(), p.num_observations(), c.len());
    let lp = build_node_lp(args.node, &la, &params)?;
    std::fs::write(&args.output, sbpi_lp::write_lp_format(&lp.model))
        .with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}
