//! Error type shared by all modules of the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lambda = {0} out of range, must lie strictly between 0 and 1")]
    OutOfRange(f64),
    #[error("base N_b = {0} too small, must be an integer >= 3")]
    BaseTooSmall(u32),
    #[error("contractivity violation: lambda * N_b = {0} must exceed 1")]
    ContractivityViolation(f64),
    #[error("tolerance {tol:e} needs more than {cap} series terms")]
    ToleranceTooSmall { tol: f64, cap: usize },
    #[error("digit {digit} out of range for base {n_b}")]
    DigitOutOfRange { digit: u32, n_b: u32 },
    #[error("vertex index {index} out of range for base {n_b}")]
    IndexOutOfRange { index: u32, n_b: u32 },
    #[error("empty word: addresses have length >= 1")]
    EmptyWord,
    #[error("invalid interval [{x1}, {x2}]: need x1 < x2")]
    InvalidInterval { x1: f64, x2: f64 },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("level m = {m} invalid here: {reason}")]
    InvalidLevel { m: u32, reason: &'static str },
    #[error("budget exceeded: {needed} needed but only {budget} allowed")]
    BudgetExceeded { needed: u128, budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to (2 = invalid input, 3 = budget).
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::BudgetExceeded { .. } => 3,
            _ => 2,
        }
    }
}
