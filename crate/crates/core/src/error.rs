use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid encoder: {0}")]
    InvalidEncoder(String),

    #[error("enumeration budget exceeded: {needed} states needed, budget is {budget}{hint}")]
    BudgetExceeded {
        needed: u128,
        budget: u64,
        hint: &'static str,
    },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("typical-decodable set is empty ({0})")]
    EmptyTypicalSet(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Fails with [`Error::BudgetExceeded`] when `needed` exceeds `budget`.
pub(crate) fn check_budget(needed: u128, budget: u64, hint: &'static str) -> Result<()> {
    if needed > budget as u128 {
        Err(Error::BudgetExceeded {
            needed,
            budget,
            hint,
        })
    } else {
        Ok(())
    }
}
