use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not satisfy an operation's contract.
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{0}: index set must be nonempty")]
    EmptyIndexSet(&'static str),

    #[error("index {index} out of range for {len} columns")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Cholesky met a pivot at or below the scaled singularity threshold.
    #[error("singular Gram matrix: non-positive pivot at index {pivot}")]
    SingularGram { pivot: usize },

    #[error("least squares needs m > n, got m = {m}, n = {n}")]
    Shape { m: usize, n: usize },

    #[error("active set of size {size} exceeds the sample count m = {m}")]
    ActiveSetOverflow { size: usize, m: usize },

    /// A PDAS failure with the regularization level and active set that triggered it.
    #[error("PDAS failed at lambda = {lambda:e} with |A| = {}: {source}", active.len())]
    AtLambda {
        lambda: f64,
        active: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("scale constant c is numerically zero (flip probability 1/2)")]
    DegenerateScale,

    #[error("no converged path point has support size in [1, {cap}]")]
    EmptyPath { cap: usize },

    #[error("iteration limit reached with residual {residual:e}")]
    MaxIterExceeded { residual: f64 },

    #[error("measurement y[{index}] = {value} is not +1 or -1")]
    InvalidMeasurement { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("malformed problem file: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips [`Error::AtLambda`] context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLambda { source, .. } => source.root(),
            other => other,
        }
    }
}
