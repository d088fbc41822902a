//! POMDP models, stochastic finite-state controllers, and bounded policy
//! iteration with full or column-generated node-improvement LPs.

pub mod bpi;
pub mod controller;
mod error;
pub mod escape;
pub mod evaluation;
pub mod improve;
pub mod lookahead;
pub mod parser;
pub mod pomdp;
pub mod random;
pub mod sparse;

pub use bpi::{run_bpi, run_bpi_from, BpiConfig, BpiOutcome, ImproveMode, IterationRecord, Termination};
pub use controller::{Controller, Node, SparsityStats};
pub use error::{Error, Result};
pub use escape::add_nodes;
pub use evaluation::{evaluate, evaluate_with, EvalMethod, EvalOptions, ValueFunction};
pub use improve::{build_node_lp, improve_node_full, ImprovementResult, ImprovementStats, ParamSet};
pub use lookahead::{backup_belief, BackupResult, Lookahead};
pub use parser::{parse_pomdp, write_pomdp, ParseDiagnostic, ParsedPomdp, Severity};
pub use pomdp::{BeliefState, Names, Pomdp};
pub use sparse::{improve_node_sparse, improve_node_sparse_early};
