use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight code {0} out of range 0..=3")]
    WeightOutOfRange(u32),

    #[error("input value {value} out of range for {bits}-bit encoding")]
    InputOutOfRange { value: u64, bits: u32 },

    #[error("cell read-path resistance {0} Ω matches none of the four programmed states")]
    CorruptCell(f64),

    #[error("invalid spike pair: second spike at {second} fs precedes first at {first} fs")]
    InvalidSpikePair { first: u64, second: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degradation is undefined for a zero ideal charge")]
    UndefinedDegradation,

    #[error("efficiency is undefined for zero energy")]
    ZeroEnergy,

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}
