use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("cell {index} has negative count {value}")]
    NegativeCount { index: usize, value: i64 },
    #[error("all counts are zero")]
    AllZero,
    #[error("null probability {index} is {value}; every cell must be strictly positive")]
    NonPositiveNull { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("probability {index} is negative ({value})")]
    NegativeProbability { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("concentration {index} is invalid ({value})")]
    InvalidConcentration { index: usize, value: f64 },
    #[error("all concentrations are zero")]
    ZeroConcentrations,
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("statistic is not convex in p and no lattice fallback resolution is set")]
    NonConvexStatistic,
    #[error("lattice oracle supports k <= {max}, got {k}")]
    LatticeTooLarge { k: usize, max: usize },
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("empty word selection")]
    EmptySelection,
    #[error("unknown selection policy '{0}'")]
    UnknownPolicy(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Corpus(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
