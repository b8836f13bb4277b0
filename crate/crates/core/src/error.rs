use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no finite logit")]
    NoFiniteLogit,

    #[error("matrix is not symmetric positive-definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degenerate column: standard deviation is {0}")]
    DegenerateColumn(f64),

    #[error("polynomial degree {degree} outside supported range {min}..={max}")]
    InvalidDegree { degree: usize, min: usize, max: usize },

    #[error("k = {k} out of range for {n} entries")]
    TopKOutOfRange { k: usize, n: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point set of size {size} exceeds the enumeration cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("labeling {labels:?} cannot be realized by the base family on the base set")]
    Unrealizable { labels: Vec<bool> },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("model `{model}` failed at degree {degree}: {source}")]
    Cell {
        model: String,
        degree: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
