use thiserror::Error;

/// Errors raised by the correlation engine and its supporting modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("order relation contains a cycle through elements {0} and {1}")]
    CycleDetected(usize, usize),

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("index {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("pair ({0}, {1}) is not a strict relation of the order")]
    NotStrictPair(usize, usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input of size {size} exceeds the limit of {limit}")]
    SizeTooLarge { size: usize, limit: usize },

    #[error("negative probability mass {value} at ({row}, {col})")]
    NegativeMass { row: usize, col: usize, value: f64 },

    #[error("probability mass sums to {0}, expected 1")]
    MassNotOne(f64),

    #[error("fewer than two symbols with positive mass on the {0} side")]
    DegenerateMarginal(&'static str),

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value {0}")]
    NonFiniteValue(f64),

    #[error("numeric value embeddings are missing on the {0} side")]
    MissingValues(&'static str),

    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),

    #[error("operation requires a total order")]
    RequiresTotalOrder,

    #[error("pair comparator violates monotonicity: {0}")]
    NotMonotoneComparator(String),

    #[error("symbol {0} has zero marginal mass")]
    ZeroMarginal(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("{relations} strict relations exceed the enumeration cap of {cap}")]
    EnumerationTooLarge { relations: usize, cap: usize },

    #[error("moment generating function denominator is degenerate at s = {0}")]
    DegenerateDenominator(f64),

    #[error("parameter s = {s} is below the minimum magnitude {min}")]
    SOutOfRange { s: f64, min: f64 },

    #[error("n = {n} exceeds the exact enumeration cap (relations per side {relations})")]
    CapExceeded { n: usize, relations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericalFailure(_) | Error::DegenerateDenominator(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
