use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: ParseReason },

    #[error("bad-line budget exceeded: {skipped} bad lines, budget {budget} (first at line {first_line})")]
    BadLineBudget {
        skipped: usize,
        budget: usize,
        first_line: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("feature index out of range: slot {slot} token {token} (cardinality {cardinality})")]
    IndexOutOfRange {
        slot: usize,
        token: u32,
        cardinality: usize,
    },

    #[error("training diverged at epoch {epoch}, step {step}: non-finite loss")]
    Diverged { epoch: usize, step: usize },

    #[error("bad format in {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("missing input: {name} ({})", path.display())]
    MissingInput { name: &'static str, path: PathBuf },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseReason {
    #[error("expected 5 fields, found {0}")]
    FieldCount(usize),
    #[error("empty {0}")]
    EmptyToken(&'static str),
    #[error("bad timestamp {0:?}")]
    Timestamp(String),
    #[error("bad clicked flag {0:?}")]
    Clicked(String),
    #[error("non-numeric dwell time {0:?}")]
    DwellNotNumeric(String),
    #[error("negative dwell time {0}")]
    NegativeDwell(f64),
    #[error("dwell time {0} on an unclicked impression")]
    DwellWithoutClick(f64),
    #[error("bad label {0:?}")]
    Label(String),
    #[error("label source {0:?} inconsistent with label")]
    Source(String),
}

impl Error {
    pub fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the caller's inputs rather than the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::BadLineBudget { .. }
                | Error::InvalidArgument(_)
                | Error::MissingInput { .. }
                | Error::Format { .. }
                | Error::Json(_)
        )
    }

    /// Short machine-parsable reason token, e.g. `missing-input:profiles`.
    pub fn reason_code(&self) -> String {
        match self {
            Error::Parse { reason, .. } => match reason {
                ParseReason::FieldCount(_) => "parse:field-count".into(),
                ParseReason::EmptyToken(_) => "parse:empty-token".into(),
                ParseReason::Timestamp(_) => "parse:timestamp".into(),
                ParseReason::Clicked(_) => "parse:clicked".into(),
                ParseReason::DwellNotNumeric(_) => "parse:dwell-not-numeric".into(),
                ParseReason::NegativeDwell(_) => "parse:negative-dwell".into(),
                ParseReason::DwellWithoutClick(_) => "parse:dwell-without-click".into(),
                ParseReason::Label(_) => "parse:label".into(),
                ParseReason::Source(_) => "parse:source".into(),
            },
            Error::BadLineBudget { .. } => "bad-line-budget".into(),
            Error::InsufficientData(_) => "insufficient-data".into(),
            Error::InvalidArgument(_) => "invalid-argument".into(),
            Error::NoData(_) => "no-data".into(),
            Error::IndexOutOfRange { .. } => "index-out-of-range".into(),
            Error::Diverged { .. } => "diverged".into(),
            Error::Format { what, .. } => format!("format:{what}"),
            Error::MissingInput { name, .. } => format!("missing-input:{name}"),
            Error::Io(_) => "io".into(),
            Error::Json(_) => "json".into(),
        }
    }
}
