use std::path::PathBuf;

use crate::route::TokenKind;

/// Everything that can go wrong while parsing, building, scoring or ranking.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    MalformedJson(#[from] serde_json::Error),

    #[error("node alternation violated at {path}: {detail}")]
    AlternationViolation { path: String, detail: String },

    #[error("route contains no reactions")]
    EmptyRoute,

    #[error("missing field `{field}` at {path}")]
    MissingField { path: String, field: &'static str },

    #[error("invalid field `{field}` at {path}: {reason}")]
    InvalidField {
        path: String,
        field: &'static str,
        reason: String,
    },

    #[error("reaction #{reaction} of route `{route_id}` has no {kind} token")]
    MissingToken {
        route_id: String,
        reaction: usize,
        kind: TokenKind,
    },

    #[error("template radius mismatch: expected {expected}, found {found}")]
    MixedRadius { expected: String, found: String },

    #[error("n-gram order mismatch: expected n={expected}, found n={found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("token kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: TokenKind,
        found: TokenKind,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("not an n-gram database (bad magic)")]
    BadMagic,

    #[error("unsupported database version `{0}`")]
    VersionMismatch(String),

    #[error("corrupt record on line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },

    #[error("reaction probability {value} outside (0, 1]")]
    ProbOutOfRange { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("results mix metrics {first} and {other}")]
    MixedMetrics { first: String, other: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by input content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
