use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("beta = {beta} is outside the declared finiteness interval [-{limit}, {limit}]")]
    BetaOutOfRange { beta: f64, limit: f64 },

    #[error("truncation budget exhausted at n = {n}: leaked mass {leaked:e} exceeds cap {budget:e}")]
    BudgetExhausted { n: u64, leaked: f64, budget: f64 },

    #[error("requested n = {needed} exceeds the scaling-sequence horizon {horizon}")]
    HorizonExceeded { needed: u128, horizon: u64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("exact tie between block values {k} and {j} in replica {replica}")]
    TieDetected { replica: u64, k: i64, j: i64 },

    #[error("weak and strong disorder criteria both hold at beta = {beta}")]
    CriteriaConflict { beta: f64 },

    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
