use thiserror::Error;

#[derive(Debug, Error)]
pub enum ApmError {
    /// An input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured size or work ceiling would be exceeded.
    #[error("resource limit exceeded: {what} (requested {requested}, limit {limit})")]
    Resource {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    /// A moment run whose bucket updates exceed the work budget.
    #[error("work budget exceeded: q in [{q_lo}, {q_hi}] needs {ops} bucket updates against a budget of {budget}; shard the q-range")]
    Shard { q_lo: u64, q_hi: u64, ops: u64, budget: u64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ApmError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(ApmError::Domain(msg.into()))
}
