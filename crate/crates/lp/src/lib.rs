//! A small dense-basis linear-programming solver that returns both primal
//! and dual solutions.
//!
//! Models are always maximizations. Variables are either non-negative or
//! free; rows are `<=`, `=` or `>=`. Duals follow the maximization
//! convention: non-negative on `<=` rows, non-positive on `>=` rows.

mod lp_format;
mod model;
mod simplex;

pub use lp_format::write_lp_format;
pub use model::{Constraint, ConstraintTag, LpModel, Relation, VarBound, Variable};
pub use simplex::{solve, solve_with, BasisVar, LpSolution, LpStatus, SolveOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("constraint {row} references unknown variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("constraint {row} stores an explicit zero for variable {var}")]
    ExplicitZero { row: usize, var: usize },
    #[error("constraint {row} has a non-finite coefficient or right-hand side")]
    NonFiniteRow { row: usize },
    #[error("variable {var} has a non-finite objective coefficient")]
    NonFiniteObjective { var: usize },
    #[error("basis matrix is numerically singular")]
    SingularBasis,
    #[error("iteration limit of {limit} pivots reached")]
    IterationLimit {
        limit: usize,
        /// Last phase-2 iterate, if phase 1 had finished.
        best_primal: Option<Vec<f64>>,
    },
    #[error("simplex cycled: {pivots} consecutive degenerate pivots after perturbation")]
    Cycling { pivots: usize },
}
