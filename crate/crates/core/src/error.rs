use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed record: field `{field}`: {reason}")]
    MalformedRecord {
        path: String,
        line: u64,
        field: String,
        reason: String,
    },

    #[error("relation `{relation}` references unknown object `{object}`")]
    DanglingEndpoint { relation: String, object: String },

    #[error("relation `{relation}` references segment `{segment}` not declared on `{object}`")]
    DanglingSegment {
        relation: String,
        object: String,
        segment: String,
    },

    #[error("unknown raw relation type `{0}`")]
    UnknownRawType(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("invalid object `{id}`: {reason}")]
    InvalidObject { id: String, reason: String },

    #[error("invalid relation `{id}`: {reason}")]
    InvalidRelation { id: String, reason: String },

    #[error("relation type `{0}` cannot be normalized (Egal must be merged)")]
    UnmappableType(String),

    #[error("cannot merge `{a}` ({kind_a}) with `{b}` ({kind_b}): kinds differ")]
    ConflictingMerge {
        a: String,
        kind_a: String,
        b: String,
        kind_b: String,
    },

    #[error("invalid method code `{0}`")]
    InvalidMethod(String),

    #[error("street `{0}` has no length; top-k ranking needs every non-punctual street measured")]
    MissingLength(String),

    #[error("object `{0}` must be split but declares no segments")]
    MissingSegments(String),

    #[error("no component reaches the size threshold of {threshold} vertices")]
    EmptyResult { threshold: usize },

    #[error("fewer than two vertices carry coordinates")]
    InsufficientCoordinates,

    #[error("no pair of vertices is connected")]
    NoFinitePairs,

    #[error("rank correlation undefined: one of the series is constant")]
    DegenerateRanks,

    #[error("partition covers {covered} vertices but the graph has {expected}")]
    UncoveredVertex { covered: usize, expected: usize },

    #[error("duplicate sweep value k={0}")]
    DuplicateK(usize),

    #[error("graph file: {0}")]
    GraphFormat(String),

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
