use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("invalid distortion spec: {0}")]
    InvalidSpec(String),

    #[error("distortion level {level} is below the minimum achievable distortion {min_distortion}")]
    Infeasible { level: f64, min_distortion: f64 },

    #[error("distortion entry {entry} = {value} is not representable on a rational grid with denominator <= {max_den}")]
    NotOnGrid {
        entry: String,
        value: f64,
        max_den: u64,
    },

    #[error("gradient mismatch at coordinate {coord}: finite difference {fd} vs closed form {kkt} (tolerance {tol})")]
    GradientMismatch {
        coord: usize,
        fd: f64,
        kkt: f64,
        tol: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid type class: {0}")]
    InvalidType(String),

    #[error("type count overflow for n={n}, alphabet size {alphabet}")]
    TypeCountOverflow { n: u32, alphabet: usize },

    #[error("exact covering cap exceeded ({0}); use cover_randomized")]
    CoverCapExceeded(String),

    #[error("covering budget {budget:.3e} exceeds the configured cap {cap}")]
    BudgetTooLarge { budget: f64, cap: u64 },

    #[error("dictionary has {actual} codewords, over the budget M = {budget}")]
    OverBudget { actual: u64, budget: u64 },

    #[error("budget M = {budget} cannot hold even the smallest dictionary ({min_size} codewords)")]
    BudgetTooSmall { budget: u64, min_size: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stream exhausted after {read} symbols before a parse completed")]
    StreamExhausted { read: usize },

    #[error("symbol {symbol} outside the source alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u32, alphabet: usize },

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("codeword index {index} out of range (dictionary holds {size})")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("unsupported format version {0}")]
    Version(u16),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    IoPlain(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    ///
    /// 1 = configuration or input error, 2 = numerical failure,
    /// 3 = integrity or audit failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. }
            | Error::GradientMismatch { .. }
            | Error::Numerical(_)
            | Error::BudgetTooLarge { .. } => 2,
            Error::Integrity(_)
            | Error::Checksum { .. }
            | Error::IndexOutOfRange { .. }
            | Error::Format(_)
            | Error::Version(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
