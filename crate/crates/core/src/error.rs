use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point kind `{found}` does not belong to a {expected} space")]
    PointMismatch { expected: &'static str, found: &'static str },
    #[error("point is outside its space: {0}")]
    PointOutOfRange(String),
    #[error("mesh must be positive, got {0}")]
    InvalidMesh(f64),
    #[error("operation requires a product space")]
    NotAProduct,
    #[error("net would contain {size} points (limit {limit})")]
    NetTooLarge { size: u128, limit: usize },
    #[error("invalid distance table: {0}")]
    InvalidTable(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("symbolic iteration power {power} exceeds the cap {cap}")]
    IterationCap { power: u64, cap: u64 },
    #[error("symbolic iteration needs {pieces} pieces (budget {budget})")]
    PieceBudget { pieces: usize, budget: usize },
    #[error("systems do not share a space")]
    SpaceMismatch,
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i64),
    #[error("matrix is not hyperbolic (trace = {0})")]
    NotHyperbolic(i64),
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
    #[error("exact solve over {size} points exceeds the cap {cap}; use greedy mode")]
    ExactCapExceeded { size: usize, cap: usize },
    #[error("exact search exceeded {0} nodes; use greedy mode")]
    SearchLimit(u64),
    #[error("net is empty")]
    EmptyNet,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("growth series is not monotone: {0}")]
    NonMonotoneSeries(String),
    #[error("epsilon schedule must be strictly decreasing and below 1: {0}")]
    NonMonotoneSchedule(String),
    #[error("epsilon schedule needs at least {needed} values, got {got}")]
    ScheduleTooShort { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("map has no fixed point in [0, 1)")]
    NoFixedPoint,
    #[error("map is not Markov: image of breakpoint {0} is not a breakpoint")]
    NotMarkov(f64),
    #[error("unknown construction `{0}`")]
    UnknownConstruction(String),
    #[error("distance-evaluation budget {budget} exceeded (needed {needed})")]
    BudgetExceeded { budget: u64, needed: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
