use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a finite number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("label file has {found} lines, expected {expected}")]
    LabelCount { expected: usize, found: usize },

    #[error("invalid label {label} at line {line} (labels must be >= -1)")]
    InvalidLabel { line: usize, label: i64 },

    #[error("no class information: every label is the unlabeled sentinel -1")]
    NoLabels,

    #[error("labeled fraction too small: {slots} labeled slots cannot cover {classes} classes")]
    FractionTooSmall { slots: usize, classes: usize },

    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),

    #[error("invalid value for {key}: {message}")]
    InvalidValue { key: String, message: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("degenerate data: all samples are identical (maximal squared distance is 0)")]
    DegenerateData,

    #[error("degenerate kernel: every entry is zero")]
    DegenerateKernel,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("requested {requested} eigenpairs of a {n}x{n} matrix")]
    TooManyEigenpairs { requested: usize, n: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("ill-conditioned kernel: gamma*I + K is not positive definite even after ridge escalation")]
    IllConditionedKernel,

    #[error("degenerate clustering: {distinct} distinct rows for {clusters} clusters")]
    DegenerateClustering { distinct: usize, clusters: usize },

    #[error("unlabeled block is singular: an unlabeled component touches no labeled point")]
    DisconnectedUnlabeled,

    #[error("degenerate PMKL objective: every kernel residual is non-positive")]
    DegenerateObjective,

    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty evaluation set")]
    EmptyRestriction,

    #[error("index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },
}

impl Error {
    /// Short stable identifier, used in experiment reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::RaggedRows { .. } => "ragged_rows",
            Error::NonNumeric { .. } => "non_numeric",
            Error::Parse { .. } => "parse",
            Error::LabelCount { .. } => "label_count",
            Error::InvalidLabel { .. } => "invalid_label",
            Error::NoLabels => "no_labels",
            Error::FractionTooSmall { .. } => "fraction_too_small",
            Error::UnknownKey(_) => "unknown_key",
            Error::InvalidValue { .. } => "invalid_value",
            Error::InvalidData(_) => "invalid_data",
            Error::DegenerateData => "degenerate_data",
            Error::DegenerateKernel => "degenerate_kernel",
            Error::Dimension(_) => "dimension",
            Error::TooManyEigenpairs { .. } => "too_many_eigenpairs",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::IllConditionedKernel => "ill_conditioned_kernel",
            Error::DegenerateClustering { .. } => "degenerate_clustering",
            Error::DisconnectedUnlabeled => "disconnected_unlabeled",
            Error::DegenerateObjective => "degenerate_objective",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::EmptyRestriction => "empty_restriction",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
