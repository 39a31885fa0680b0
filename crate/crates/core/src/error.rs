use std::path::PathBuf;

use crate::learners::LearnerError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown condition `{label}` for experiment {experiment}")]
    UnknownCondition { experiment: String, label: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("paragraph template for `{noun}` does not match the lexicon: {detail}")]
    TemplateMismatch { noun: String, detail: String },

    #[error("missing value for prompt slot `{0}`")]
    MissingSlot(&'static str),

    #[error("no parseable responses in run")]
    NoParseableTrials,

    #[error("expected {expected} records, got {got}")]
    RecordCount { expected: usize, got: usize },

    #[error("invalid grammar: {0}")]
    Grammar(String),

    #[error("grammar file line {line}: {msg}")]
    GrammarSyntax { line: usize, msg: String },

    #[error("no sentence of length {min}..={max} is accepted by the grammar")]
    InfeasibleRange { min: usize, max: usize },

    #[error("enumeration length {0} exceeds the limit of 12")]
    EnumerationLimit(usize),

    #[error("could not find an ungrammatical single-letter variant of `{0}` after 100 attempts")]
    PerturbationExhausted(String),

    #[error("questionnaire corpus must hold at least 1000 sentences, got {0}")]
    CorpusTooSmall(usize),

    #[error("invalid statistic input: {0}")]
    Stats(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing reference value for {0}")]
    MissingReference(String),

    #[error(transparent)]
    Learner(#[from] LearnerError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
