//! Crate-level error with process exit codes.

use std::path::PathBuf;

use thiserror::Error;

use crate::affect::AffectError;
use crate::evalkit::EvalError;
use crate::ingest::IngestError;
use crate::linguistics::{LinguisticsError, TaggerError};
use crate::llm::LlmError;
use crate::norms::NormError;
use crate::reportgen::ReportError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Linguistics(#[from] LinguisticsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Affect(#[from] AffectError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing norms: {0}")]
    MissingNorms(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl From<TaggerError> for Error {
    fn from(e: TaggerError) -> Self {
        Error::Linguistics(LinguisticsError::Tagger(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for input and schema problems, 3 for analysis failures, 4 for the
    /// language-model service.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingest(_) | Error::Eval(EvalError::Schema(_) | EvalError::Range { .. } | EvalError::Csv(_)) => 2,
            Error::Norm(NormError::Schema(_) | NormError::Csv(_) | NormError::MissingNorm(_)) => 2,
            Error::Report(ReportError::MissingNorm(_) | ReportError::Template(_) | ReportError::Catalog(_)) => 2,
            Error::Linguistics(LinguisticsError::Tagger(TaggerError::Lexicon { .. })) => 2,
            Error::Io { .. } | Error::MissingNorms(_) | Error::Config(_) => 2,
            Error::Llm(LlmError::Transport(_) | LlmError::Service { .. } | LlmError::GaveUp { .. }) => 4,
            _ => 3,
        }
    }

    /// Short error class printed on failure.
    pub fn class_name(&self) -> &'static str {
        match self {
            Error::Ingest(e) => match e {
                IngestError::EmptyLog => "EmptyLog",
                IngestError::Parse { .. } => "ParseError",
                IngestError::Schema(_) => "SchemaError",
                IngestError::Range { .. } => "RangeError",
                IngestError::NotFound(_) => "NotFound",
                IngestError::CatalogMismatch(_) => "CatalogMismatch",
                IngestError::Structure(_) => "StructureError",
                IngestError::Csv(_) => "CsvError",
            },
            Error::Linguistics(e) => match e {
                LinguisticsError::IndicatorsUnavailable(_) => "IndicatorsUnavailable",
                LinguisticsError::InvalidDuration(_) => "InvalidDuration",
                LinguisticsError::Tagger(_) => "TaggerError",
            },
            Error::Stats(_) => "StatsError",
            Error::Affect(_) => "AffectError",
            Error::Norm(NormError::MissingNorm(_)) | Error::Report(ReportError::MissingNorm(_)) => "MissingNorm",
            Error::MissingNorms(_) => "MissingNorm",
            Error::Norm(NormError::EmptyCohort) => "EmptyInput",
            Error::Norm(_) => "NormError",
            Error::Report(e) => match e {
                ReportError::Range(_) => "RangeError",
                ReportError::EmptyInput => "EmptyInput",
                ReportError::Template(_) => "TemplateError",
                ReportError::Render(_) => "RenderError",
                ReportError::Catalog(_) => "CatalogMismatch",
                ReportError::TooManyAttempts(_) => "TooManyAttempts",
                _ => "ReportError",
            },
            Error::Llm(e) => match e {
                LlmError::IncompletePayload(_) => "IncompletePayload",
                LlmError::Transport(_) => "TransportError",
                LlmError::Service { .. } => "ServiceError",
                LlmError::GaveUp { .. } => "TransportError",
            },
            Error::Eval(e) => match e {
                EvalError::Schema(_) => "SchemaError",
                EvalError::Range { .. } => "RangeError",
                EvalError::EmptyInput(_) => "EmptyInput",
                EvalError::Stats(_) => "StatsError",
                EvalError::Csv(_) => "CsvError",
            },
            Error::Io { .. } => "IoError",
            Error::Config(_) => "ConfigError",
        }
    }
}
