use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("results matrix is empty")]
    EmptyMatrix,

    #[error("row {row} has {found} trials, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("cell ({row}, {col}) holds category {value}, allowed range is 0..={max}")]
    CategoryOutOfRange {
        row: usize,
        col: usize,
        value: i64,
        max: u32,
    },

    #[error("at least two categories are required (C >= 1), got {0}")]
    TooFewCategories(usize),

    #[error("prior matrix is {prior_questions} questions over C={prior_max}, results are {questions} questions over C={max}")]
    PriorShapeMismatch {
        questions: usize,
        max: u32,
        prior_questions: usize,
        prior_max: u32,
    },

    #[error("weight vector has {found} entries, matrix has {expected} categories")]
    WeightLengthMismatch { expected: usize, found: usize },

    #[error("weight {index} is not finite")]
    NonFiniteWeight { index: usize },

    #[error("operation needs at least one trial (N = 0)")]
    ZeroTrials,

    #[error("k must be at least 1")]
    KZero,

    #[error("k = {k} exceeds the {n} available trials")]
    KExceedsN { k: usize, n: usize },

    #[error("mG-Pass@k needs k >= 2, got {0}")]
    KTooSmall(usize),

    #[error("tolerance must lie in (0, 1], got {0}")]
    TauOutOfRange(String),

    #[error("pass-family estimators need a binary matrix (C = 1), got C = {0}")]
    NotBinary(u32),

    #[error("z must be non-negative, got {0}")]
    NegativeZ(f64),

    #[error("invalid scored model {model_id}: {reason}")]
    InvalidScore { model_id: String, reason: String },

    #[error("rankings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("Kendall tau needs at least two items")]
    TooShort,

    #[error("Kendall tau undefined: one ranking is entirely tied")]
    AllTied,

    #[error("target z = {target} not reached within {budget} trials")]
    NotReachable { target: f64, budget: usize },

    #[error("method {method} is undefined at N = {n} (needs N >= {required})")]
    MethodUndefinedAtN {
        method: String,
        n: usize,
        required: usize,
    },

    #[error("invalid method spec {0:?}")]
    InvalidMethod(String),

    #[error("invalid resample plan: {0}")]
    InvalidPlan(String),

    #[error("model matrices disagree: {0}")]
    CohortMismatch(String),

    #[error("invalid cohort spec: {0}")]
    InvalidCohort(String),

    #[error("signal grid incomplete: question {question} has no trial {trial}")]
    IncompleteGrid { question: String, trial: u64 },

    #[error("no signal records")]
    EmptyInput,

    #[error("no wrong attempts to compute the wrong-item percentile from")]
    NoWrongItems,

    #[error("no correct attempts to compute the correct-item percentiles from")]
    NoCorrectItems,

    #[error("schema {schema} has no rule covering the attempt")]
    UncoveredCase { schema: String },

    #[error("unknown schema {name:?}; known schemata: {known}")]
    UnknownSchema { name: String, known: String },

    #[error("invalid schema definition: {0}")]
    InvalidSchema(String),

    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        column: u64,
        message: String,
    },

    #[error("{source_name}:{line}: missing field `{field}`")]
    MissingField {
        source_name: String,
        line: u64,
        field: String,
    },

    #[error("{source_name}:{line}: field `{field}` = {value} is out of range ({allowed})")]
    RangeViolation {
        source_name: String,
        line: u64,
        field: String,
        value: f64,
        allowed: &'static str,
    },

    #[error("{source_name}:{line}: duplicate cell (question {question}, trial {trial})")]
    DuplicateCell {
        source_name: String,
        line: u64,
        question: String,
        trial: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyMatrix => "EmptyMatrix",
            Error::RaggedRows { .. } => "RaggedRows",
            Error::CategoryOutOfRange { .. } => "CategoryOutOfRange",
            Error::TooFewCategories(_) => "TooFewCategories",
            Error::PriorShapeMismatch { .. } => "PriorShapeMismatch",
            Error::WeightLengthMismatch { .. } => "WeightLengthMismatch",
            Error::NonFiniteWeight { .. } => "NonFiniteWeight",
            Error::ZeroTrials => "ZeroTrials",
            Error::KZero => "KZero",
            Error::KExceedsN { .. } => "KExceedsN",
            Error::KTooSmall(_) => "KTooSmall",
            Error::TauOutOfRange(_) => "TauOutOfRange",
            Error::NotBinary(_) => "NotBinary",
            Error::NegativeZ(_) => "NegativeZ",
            Error::InvalidScore { .. } => "InvalidScore",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::TooShort => "TooShort",
            Error::AllTied => "AllTied",
            Error::NotReachable { .. } => "NotReachable",
            Error::MethodUndefinedAtN { .. } => "MethodUndefinedAtN",
            Error::InvalidMethod(_) => "InvalidMethod",
            Error::InvalidPlan(_) => "InvalidPlan",
            Error::CohortMismatch(_) => "CohortMismatch",
            Error::InvalidCohort(_) => "InvalidCohort",
            Error::IncompleteGrid { .. } => "IncompleteGrid",
            Error::EmptyInput => "EmptyInput",
            Error::NoWrongItems => "NoWrongItems",
            Error::NoCorrectItems => "NoCorrectItems",
            Error::UncoveredCase { .. } => "UncoveredCase",
            Error::UnknownSchema { .. } => "UnknownSchema",
            Error::InvalidSchema(_) => "InvalidSchema",
            Error::Parse { .. } => "ParseError",
            Error::MissingField { .. } => "MissingField",
            Error::RangeViolation { .. } => "RangeViolation",
            Error::DuplicateCell { .. } => "DuplicateCell",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
