//! Confront networks: graphs extracted from a database of historical spatial
//! objects and the relative-position statements ("confronts") linking them.
//!
//! The crate covers the whole chain:
//!
//! * [`model`] / [`loader`]: objects, raw relations, CSV/JSON ingestion.
//! * [`normalize`]: raw relation vocabulary to normalized types, `Egal` merging.
//! * [`extract`]: the sixteen extraction methods (`RHW_all` .. `EFS_k`).
//! * [`metrics`]: order, size, density, coverage, distances, rank correlation.
//! * [`sweep`]: k-sweeps over the longest streets and Pareto selection.
//! * [`community`]: Louvain, modularity, per-community statistics.
//! * [`export`]: GraphML, GEXF and a versioned binary cache.

pub mod community;
pub mod error;
pub mod export;
pub mod extract;
pub mod graph;
pub mod loader;
pub mod metrics;
pub mod model;
pub mod normalize;
pub mod sweep;
pub mod synth;

pub use community::{
    community_network, community_stats, louvain, modularity, CommunityNetwork,
    CommunityPartition, CommunityStats,
};
pub use error::{Error, Result};
pub use extract::{extract, ExtractionMethod, Scope};
pub use graph::{ConfrontGraph, EdgeOrigin, SimpleGraph};
pub use loader::{load_database, validate_database, write_database, Warning};
pub use metrics::{summarize, DistanceProfile, GraphSummary};
pub use model::{Database, Dimensionality, ObjectKind, Point, RelationOrigin, RelationRecord, SpatialObject};
pub use normalize::{merge_equal_objects, normalize_relation_type, NormalizedType, RawRelation};
pub use sweep::{pareto_front, select_best, sweep_k, SweepPoint};
