use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight vector is empty")]
    EmptyWeights,

    #[error("weight vector has zero total weight")]
    ZeroTotalWeight,

    #[error("ids and values differ in length ({ids} ids, {values} values)")]
    IdLengthMismatch { ids: usize, values: usize },

    #[error("duplicate client id {0}")]
    DuplicateId(u64),

    #[error("proportion {0} is outside its allowed range")]
    InvalidProportion(String),

    #[error("interval index {index} is outside 1..{len}")]
    IntervalIndex { index: usize, len: usize },

    #[error("the mwp constraint does not bind from above on interval {index}")]
    DegenerateInterval { index: usize },

    #[error("truncation cannot satisfy the requested weight bound")]
    PreprocessInfeasible,

    #[error("alpha ({alpha}) must exceed eps1 ({eps1}) for the certificate to be formed")]
    AlphaTooSmall { alpha: f64, eps1: f64 },

    #[error("sample value {value} exceeds the truncation bound {cap}")]
    ValueExceedsCap { value: u64, cap: u64 },

    #[error("sample has {actual} values, expected {expected}")]
    SampleSizeMismatch { expected: usize, actual: usize },

    #[error("cannot give {clients} clients at least one sample each from {total} samples")]
    InfeasibleTotal { total: u64, clients: usize },

    #[error("partition sizes sum to {sizes} but the dataset has {rows} rows")]
    SizeMismatch { sizes: u64, rows: usize },

    #[error("client {0} has no usable data")]
    EmptyClientData(u64),

    #[error("client {id}: {reason}")]
    InvalidClient { id: u64, reason: String },

    #[error("aggregation weights sum to zero")]
    WeightSumZero,

    #[error("trimming beta={0} removes all of the weight mass")]
    AllMassTrimmed(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
