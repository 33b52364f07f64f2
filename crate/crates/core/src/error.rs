use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlateError {
    #[error("bad plate spec token \"{0}\"")]
    BadToken(String),
    #[error("unknown plate format \"{0}\" (expected 12, 24, 96, 384, 1536, RxC or RxC:stride)")]
    UnknownFormat(String),
    #[error("plate {0} must be at least 1")]
    ZeroDimension(&'static str),
    #[error("bad adjacency stride \"{0}\" (must be an integer >= 1)")]
    BadStride(String),
    #[error("well {well} outside plate of {wells} wells")]
    WellOutOfRange { well: u32, wells: u32 },
    #[error("coordinate (row {row}, col {col}) outside {rows}x{cols} plate")]
    CoordOutOfRange { row: u32, col: u32, rows: u32, cols: u32 },
}

/// Errors raised while reading task or work-list files.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate transfer ({src},{dst})")]
    Duplicate { line: usize, src: u32, dst: u32 },
    #[error("line {line}: volume {volume} must be > 0")]
    NonPositiveVolume { line: usize, volume: f64 },
    #[error("line {line}: {side} well {well} outside plate of {wells} wells")]
    OutOfRange {
        line: usize,
        side: &'static str,
        well: u32,
        wells: u32,
    },
    #[error("line {line}: {source}")]
    Plate {
        line: usize,
        #[source]
        source: PlateError,
    },
    #[error("missing header, expected `{0}`")]
    MissingHeader(&'static str),
    #[error("no {0} plate given (use a `#{0}_plate=` comment or a flag)")]
    MissingPlate(&'static str),
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("order is not a permutation of 1..={m}: {reason}")]
    NotPermutation { m: usize, reason: String },
    #[error("job index {index} out of range 1..={m}")]
    JobOutOfRange { index: usize, m: usize },
    #[error("exhaustive search refused: {m} jobs exceeds the limit of {limit}")]
    TooLarge { m: usize, limit: usize },
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("nothing to schedule")]
    Empty,
}

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("{m} transfers requested but only {cells} source/destination pairs exist")]
    TooManyTransfers { m: usize, cells: usize },
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}
