use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("topic index {index} out of range for K={k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("moment order {order} exceeds the cached limit {max}")]
    OrderExceedsCache { order: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mixing distribution is not exchangeable: {0}")]
    NotExchangeable(String),

    #[error("mixing distribution violates the regularity margins: {0}")]
    Irregular(String),

    #[error("mixing distribution `{0}` has no sampler")]
    Unsampleable(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} needs {size} terms, above the limit of {limit}; reduce V, K or m")]
    TooLarge { what: &'static str, size: f64, limit: f64 },

    #[error("floor c0={c0} is infeasible for V={v}: need c0*V < 1")]
    InfeasibleFloor { c0: f64, v: usize },

    #[error("invalid topic matrix: {0}")]
    InvalidTopics(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("perturbation direction violates its constraints: {0}")]
    InvalidDirection(String),

    #[error("direction vanishes: {0}")]
    VanishingDirection(String),

    #[error("order {order} outside 1..={m}")]
    OrderOutOfRange { order: usize, m: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("slope undefined: need at least 3 sample sizes, got {0}")]
    SlopeUndefined(usize),

    #[error("perturbed parameter leaves the feasible set: {0}")]
    InfeasiblePerturbation(String),

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Runtime size guards, as opposed to invalid input.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::TooLarge { .. } | Error::OrderExceedsCache { .. })
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), msg: err.to_string() }
    }
}
