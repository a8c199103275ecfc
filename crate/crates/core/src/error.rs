use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("distribution is not critical: mean {mean} (|mean - 1| must be <= 1e-9)")]
    CriticalityViolated { mean: f64 },
    #[error("degenerate distribution: variance is zero")]
    Degenerate,
    #[error("no tree of size {n} can be generated: {reason}")]
    InfeasibleSize { n: usize, reason: String },
    #[error("rejection sampling gave up after {attempts} attempts")]
    AttemptsExhausted { attempts: u64 },
    #[error("invalid degree sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("node {node} out of range for tree of size {n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("tree cannot arise from this offspring distribution")]
    InfeasibleTree,
    #[error("plain-real posterior would underflow at n = {n}; use the log-space variant")]
    UnderflowRisk { n: usize },
    #[error("n = {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
