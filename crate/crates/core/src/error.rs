use thiserror::Error;

use crate::families::Family;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or draw outside the domain of a key formula.
    #[error("{family}: {what} = {value} is out of range ({reason})")]
    Domain {
        family: Family,
        what: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Zero strength under a multiplicative family, which would mean zero mass.
    #[error("{family}: strength 0 is a degenerate weight; omit the row instead")]
    DegenerateWeight { family: Family },

    /// A family error raised while keying a specific row.
    #[error("row ({group_id}, {label}): {source}")]
    Row {
        group_id: String,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("row ({group_id}, {label}) not found")]
    NotFound { group_id: String, label: String },

    #[error("duplicate row ({group_id}, {label})")]
    DuplicateRow { group_id: String, label: String },

    #[error("invalid weight table: {0}")]
    WeightTable(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("expected count {expected:.3} in cell {cell} is below 5")]
    ExpectedCountTooSmall { cell: usize, expected: f64 },

    #[error("expected probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: f64 },

    #[error("{what}: {got} samples, need at least {min}")]
    TooFewSamples {
        what: &'static str,
        got: usize,
        min: usize,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Attaches the offending row to a family error.
    pub(crate) fn at_row(self, group_id: &str, label: &str) -> Self {
        Error::Row {
            group_id: group_id.to_owned(),
            label: label.to_owned(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a family domain or degenerate-weight error.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain { .. } | Error::DegenerateWeight { .. } => true,
            Error::Row { source, .. } => source.is_domain(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
