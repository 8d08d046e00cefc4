use thiserror::Error;

/// Errors raised by state construction, cone tests and certificate searches.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight p({i},{j}) = {weight} is negative or not a number")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("weights sum to {sum}, expected 1 for a normalized state")]
    BadNormalization { sum: f64 },

    #[error("index pair ({i},{j}) is invalid for local dimension {d} (need 0 <= i <= j < d)")]
    BadIndex { i: usize, j: usize, d: usize },

    #[error("weight for pair ({i},{j}) given more than once")]
    DuplicateEntry { i: usize, j: usize },

    #[error("local dimension {0} is too small")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("numerical rank {0} exceeds 2")]
    RankTooHigh(usize),

    #[error("matrix is not doubly nonnegative")]
    NotDnn,

    #[error("state is not PPT (minimum partial-transpose eigenvalue {0:e})")]
    NotPpt(f64),

    #[error("all pivots fell below the rank cutoff")]
    NumericalDegeneracy,

    #[error("the all-ones direction is not in the range of M")]
    UNotInRange,

    #[error("u_x is not in the range of M")]
    UxNotInRange,

    #[error("no feasible parameter: lower bound {lower} exceeds upper bound {upper}")]
    Infeasible { lower: f64, upper: f64 },

    #[error("vector entry {index} must be strictly positive, found {value}")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("vector has no positive entry")]
    AllZero,

    #[error("search budget exhausted without a certificate")]
    NotFound,

    #[error("invalid subset {subset:?} for dimension {d} (witness size {size})")]
    BadSubset { subset: Vec<usize>, d: usize, size: usize },

    #[error("invalid parameter: {0}")]
    BadParam(String),

    #[error("bipartition cut {m} is outside 0..={n}")]
    BadCut { m: usize, n: usize },

    #[error("{supports} candidate supports exceed the cap of {cap}")]
    SupportBudgetExceeded { supports: u64, cap: u64 },

    #[error("block decomposition needs the coherence between |D_0> and |D_N>, found ({0},{1})")]
    UnsupportedCoherence(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
