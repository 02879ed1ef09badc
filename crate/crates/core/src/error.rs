use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid has {total} vertices, above the cap of {cap}")]
    TooLarge { total: u128, cap: u64 },
    #[error("{what} out of range: {value} not in {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("invalid rounding input: {0}")]
    Rounding(String),
    #[error("invalid matrix: {0}")]
    Matrix(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("no caterpillar found for t={t}, leaf degree {leaf_degree}")]
    NoCaterpillar { t: u32, leaf_degree: u32 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(what: &'static str, value: i64, lo: i64, hi: i64) -> Error {
    Error::OutOfRange { what, value, lo, hi }
}
