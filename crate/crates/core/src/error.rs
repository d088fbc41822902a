use sbpi_lp::LpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid belief state: {0}")]
    InvalidBelief(String),
    #[error("observation {observation} is impossible after action {action} at this belief")]
    ImpossibleObservation { action: usize, observation: usize },
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
    #[error("linear program failed")]
    Lp(#[from] LpError),
    #[error("linear program for node {node} ended with status {status}")]
    LpStatus { node: usize, status: &'static str },
    #[error("policy evaluation did not converge (residual {residual:e})")]
    Evaluation { residual: f64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("policy document: {0}")]
    PolicyFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(what: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, size })
    }
}
