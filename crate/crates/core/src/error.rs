use crate::types::ConditionId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,

    #[error("series too short: need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("series length must be even for the spectrum, got {0}")]
    OddLength(usize),

    #[error("degenerate sample: zero variance")]
    ZeroVariance,

    #[error("series lengths differ: z={z}, v={v}, f={f}")]
    LengthMismatch { z: usize, v: usize, f: usize },

    #[error("z = {0} mm outside the 0..10 mm workspace")]
    ZOutOfRange(f64),

    #[error("negative z = {0} mm has no pitch")]
    NegativeZ(f64),

    #[error("invalid condition {0:?}: expected \"n,m\" with n in 0..=5 and m in 0..=1")]
    InvalidCondition(String),

    #[error("bin width must be positive, got {0}")]
    NonPositiveBinWidth(f64),

    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("band {lo}..{hi} Hz covers {bins} spectrum bins, need at least {need}")]
    BandTooNarrow {
        lo: f64,
        hi: f64,
        bins: usize,
        need: usize,
    },

    #[error("no spectra to average")]
    NoSpectra,

    #[error("spectra have mixed resolutions: df {a} Hz vs {b} Hz")]
    MixedResolutions { a: f64, b: f64 },

    #[error("spectra have mixed lengths: {a} bins vs {b} bins")]
    MixedLengths { a: usize, b: usize },

    #[error("sample size {n} outside {min}..={max} supported by the W test")]
    SampleSizeOutOfRange { n: usize, min: usize, max: usize },

    #[error("need at least {need} groups, got {got}")]
    TooFewGroups { need: usize, got: usize },

    #[error("F statistic undefined: zero variance within groups and identical means")]
    UndefinedFStatistic,

    #[error("duplicate group {0}")]
    DuplicateGroup(String),

    #[error("group {name}: expected {need} entries, got {got}")]
    WrongGroupSize {
        name: String,
        need: usize,
        got: usize,
    },

    #[error("group {name}: entry {index} is {value}, amplitudes must be positive")]
    NonPositiveAmplitude {
        name: String,
        index: usize,
        value: f64,
    },

    #[error("missing group {0}")]
    MissingGroup(ConditionId),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unstable simulation: {clamped} of {steps} steps hit the workspace bounds")]
    UnstableSimulation { clamped: usize, steps: usize },

    #[error("{path}: no header")]
    NoHeader { path: String },

    #[error("{path}: expected {need} rows, got {got}")]
    WrongRowCount {
        path: String,
        need: usize,
        got: usize,
    },

    #[error("{path}: expected {need} columns, got {got}")]
    WrongColumnCount {
        path: String,
        need: usize,
        got: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a number")]
    BadCell {
        path: String,
        row: usize,
        col: String,
        value: String,
    },

    #[error("{path}: line {line}: {msg}")]
    BadLine {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: missing condition metadata")]
    MissingCondition { path: String },

    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a file path to parse errors produced against an anonymous reader.
    pub fn with_path(self, path: &str) -> Self {
        let p = path.to_string();
        match self {
            Error::NoHeader { .. } => Error::NoHeader { path: p },
            Error::WrongRowCount { need, got, .. } => Error::WrongRowCount { path: p, need, got },
            Error::WrongColumnCount { need, got, .. } => {
                Error::WrongColumnCount { path: p, need, got }
            }
            Error::BadCell {
                row, col, value, ..
            } => Error::BadCell {
                path: p,
                row,
                col,
                value,
            },
            Error::BadLine { line, msg, .. } => Error::BadLine { path: p, line, msg },
            Error::MissingCondition { .. } => Error::MissingCondition { path: p },
            other => other,
        }
    }
}
