use thiserror::Error;

/// Errors raised across the toolkit.
///
/// `Domain` covers every violated precondition (a parameter outside the range
/// an operation is defined on); the message names the violated condition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{0}")]
    Domain(String),

    #[error("operator is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("chain is not irreducible and aperiodic")]
    NotErgodic,

    #[error("singular linear system")]
    Singular,

    #[error("resource limit exceeded: {requested} values requested, cap is {cap}")]
    ResourceLimit { requested: u128, cap: u128 },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns a `Domain` error carrying `msg` unless `cond` holds.
pub(crate) fn ensure(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(msg))
    }
}
