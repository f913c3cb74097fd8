use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or invalid rule file. `line` is 1-based when the problem
    /// can be pinned to a single line.
    #[error("rule{}: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Rule { line: Option<usize>, message: String },

    #[error("configuration dump line {line}: {message}")]
    Dump { line: usize, message: String },

    #[error("profile csv line {line}: {message}")]
    ProfileCsv { line: usize, message: String },

    #[error("unknown builtin rule `{0}`")]
    UnknownRule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("valid region exhausted after {steps} step(s) of radius {radius}")]
    ValidRegionExhausted { steps: usize, radius: u32 },

    #[error("window {width}x{height} is too large")]
    WindowTooLarge { width: usize, height: usize },

    #[error("cell ({i},{j}) lies outside the valid region")]
    CellOutsideValidRegion { i: i64, j: i64 },

    #[error("operation requires a linear rule")]
    NonLinearRule,

    #[error("alphabet size {0} is not prime")]
    NonPrimeAlphabet(u8),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("profile grid mismatch: {0}")]
    GridMismatch(String),

    #[error("profile is missing cardinal angle {0}")]
    MissingCardinal(f64),

    #[error("quadrature grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("inconsistent units: {0}")]
    UnitMismatch(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
}

impl Error {
    /// True for errors caused by malformed input text (rule files, dumps, csv).
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Error::Rule { .. } | Error::Dump { .. } | Error::ProfileCsv { .. } | Error::UnknownRule(_)
        )
    }
}
