use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a matrix or dataset file was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadErrorKind {
    BadMagic,
    UnsupportedVersion(u16),
    Truncated,
    TrailingBytes,
    Parse(String),
    NonFinite,
    LabelOutOfRange { label: usize, n_classes: usize },
    Inconsistent(String),
}

impl std::fmt::Display for LoadErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadErrorKind::BadMagic => write!(f, "magic mismatch (expected \"ZSAR\")"),
            LoadErrorKind::UnsupportedVersion(v) => write!(f, "unsupported format version {v}"),
            LoadErrorKind::Truncated => write!(f, "file truncated"),
            LoadErrorKind::TrailingBytes => write!(f, "unexpected trailing bytes"),
            LoadErrorKind::Parse(msg) => write!(f, "parse error: {msg}"),
            LoadErrorKind::NonFinite => write!(f, "non-finite value"),
            LoadErrorKind::LabelOutOfRange { label, n_classes } => {
                write!(f, "label {label} out of range for {n_classes} classes")
            }
            LoadErrorKind::Inconsistent(msg) => write!(f, "inconsistent dimensions: {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("{op}: matrix is not symmetric (max |m_ij - m_ji| = {asymmetry:e})")]
    NotSymmetric { op: &'static str, asymmetry: f64 },

    #[error("singular Sylvester pencil: eigenvalue sum {min_sum:e} <= 1e-12")]
    SingularPencil { min_sum: f64 },

    #[error("class {class} has no examples")]
    EmptyClass { class: usize },

    #[error("degenerate attributes: all pairwise distances are zero")]
    DegenerateAttributes,

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data validation failed: {0}")]
    DataValidation(String),

    #[error("{path}: {kind} at offset {offset}")]
    Load {
        path: PathBuf,
        offset: u64,
        kind: LoadErrorKind,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::SingularPencil { .. } => "singular_pencil",
            Error::EmptyClass { .. } => "empty_class",
            Error::DegenerateAttributes => "degenerate_attributes",
            Error::NonFinite { .. } => "non_finite",
            Error::Config(_) => "config",
            Error::DataValidation(_) => "data_validation",
            Error::Load { .. } => "load",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SingularPencil { .. } | Error::NonFinite { .. })
    }
}
