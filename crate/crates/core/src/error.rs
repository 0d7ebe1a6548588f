//! Shared error type for the library crates.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid quadruple: {0}")]
    InvalidQuadruple(String),

    #[error("interval length must be positive, got {0}")]
    InvalidIntervalLength(i64),

    #[error("scenario S produces a flat sequence, not a tree")]
    FlatScenario,

    #[error("section dictionary maps '{surface}' to unknown section '{canonical}'")]
    UnknownSection { surface: String, canonical: String },

    #[error("lexicon entry '{0}' has an empty surface form")]
    EmptyLexiconSurface(String),

    #[error("unknown semantic type '{0}'")]
    UnknownSemanticType(String),

    #[error("vocabulary is empty after applying min_count")]
    EmptyVocabulary,

    #[error("invalid training configuration: {0}")]
    InvalidTrainingConfig(String),

    #[error("non-finite loss encountered during training")]
    NonFiniteLoss,

    #[error("unknown document tag '{0}'")]
    UnknownTag(String),

    #[error("model file is malformed: {0}")]
    MalformedModel(String),

    #[error("k = {k} is out of range for a corpus of {corpus} documents")]
    InvalidK { k: usize, corpus: usize },

    #[error("scenarios do not share an admission set: {0}")]
    MismatchedAdmissions(String),

    #[error("signed-rank test needs at least {needed} non-zero differences, got {got}")]
    TooFewDifferences { needed: usize, got: usize },

    #[error("paired samples have different lengths: {0} vs {1}")]
    UnpairedSamples(usize, usize),

    #[error("insufficient data for prediction: {0}")]
    InsufficientData(String),

    #[error("could not draw stratified folds after {0} attempts")]
    FoldDrawFailed(usize),

    #[error("invalid generator parameters: {0}")]
    InvalidSynthParams(String),

    #[error("column '{column}' is missing from {file}")]
    MissingColumn { file: PathBuf, column: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage '{stage}' requires artifact {path} from an earlier stage")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed input: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }

    pub(crate) fn stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage { stage, source: Box::new(source) }
    }
}
