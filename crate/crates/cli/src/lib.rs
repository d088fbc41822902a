//! Command-line harness: solve problems, compare full and sparse node
//! improvement, and cross-check policies by simulation.

pub mod bench;
pub mod cli;
pub mod report;
pub mod simulate;

pub use cli::{run, Cli};
