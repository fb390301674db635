use thiserror::Error;

/// Errors raised while building or evaluating on a treeplex.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeplexError {
    #[error("infoset {infoset} has no actions")]
    ZeroActions { infoset: usize },
    #[error("infoset {infoset} references parent sequence {parent}, but only {len} sequences exist")]
    ParentOutOfRange {
        infoset: usize,
        parent: usize,
        len: usize,
    },
    #[error("infoset {infoset} lies on a parent cycle")]
    Cycle { infoset: usize },
    #[error("expected a vector of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector is not in the strategy set (residual {residual:.3e})")]
    NotInTreeplex { residual: f64 },
    #[error("entry {index} is {value:e}, expected strictly positive")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("interior mixing weight {0} outside [0, 1)")]
    InvalidDelta(f64),
}

/// Errors raised while constructing or compiling a game tree.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("leduc needs at least 2 ranks, got {0}")]
    TooFewRanks(usize),
    #[error("chance node {node} probabilities sum to {sum}")]
    ChanceSum { node: usize, sum: f64 },
    #[error("infoset `{key}` is used inconsistently: {reason}")]
    InconsistentInfoset { key: String, reason: &'static str },
    #[error("imperfect recall at infoset `{key}`")]
    ImperfectRecall { key: String },
    #[error("terminal {node} stores chance reach {stored}, path product is {expected}")]
    ChanceReach {
        node: usize,
        stored: f64,
        expected: f64,
    },
    #[error(transparent)]
    Treeplex(#[from] TreeplexError),
}

/// Errors raised by the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("step size {0} outside (0, 1)")]
    InvalidTau(f64),
    #[error("step size fell below {min:e} at iteration {iteration}; numerical stagnation")]
    TauUnderflow { iteration: usize, min: f64 },
    #[error("initialization did not reach the excessive gap condition (mu = {mu:e})")]
    InitFailed { mu: f64 },
    #[error("excessive gap condition violated at iteration {iteration} (gap {gap:e})")]
    GapViolated { iteration: usize, gap: f64 },
    #[error("exploitability {0:e} is negative beyond tolerance")]
    NegativeExploitability(f64),
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("warm fraction {0} outside (0, 1)")]
    InvalidWarmFraction(f64),
    #[error("{iterations} iterations split into {warm} warm and {main} main; both phases need at least one")]
    EmptyPhase {
        iterations: usize,
        warm: usize,
        main: usize,
    },
    #[error("payoff matrix is {rows}x{cols}, treeplexes have {expected_rows} and {expected_cols} sequences")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error(transparent)]
    Treeplex(#[from] TreeplexError),
}
