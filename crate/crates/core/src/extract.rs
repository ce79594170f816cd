//! Graph extraction: the sixteen methods obtained by combining
//!
//! * `R` / `E`: registers only, or extended with additional street adjacency,
//! * `H` / `F`: hierarchical membership edges kept, or dropped (flat),
//! * `W` / `S`: non-punctual objects whole, or split into their segments,
//! * `all` / `streets` / `k`: which non-punctual objects are handled.
//!
//! Every method runs the same chain: full graph, hierarchy filter,
//! non-punctual handling with leaf pruning, additional edges, and the minor
//! component filter.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{segment_vertex_id, ConfrontGraph, EdgeOrigin, GraphBuilder, Vertex};
use crate::model::{Database, RelationRecord, SpatialObject};
use crate::normalize::{merge_equal_objects, normalize_relation_type, NormalizedType};

pub const DEFAULT_COMPONENT_THRESHOLD: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    StreetsOnly,
    TopK,
}

impl Scope {
    pub fn suffix(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::StreetsOnly => "streets",
            Scope::TopK => "k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtractionMethod {
    pub use_additional: bool,
    pub keep_hierarchy: bool,
    pub split: bool,
    pub scope: Scope,
    pub k: usize,
    pub component_threshold: usize,
}

impl ExtractionMethod {
    pub fn new(use_additional: bool, keep_hierarchy: bool, split: bool, scope: Scope) -> Self {
        ExtractionMethod {
            use_additional,
            keep_hierarchy,
            split,
            scope,
            k: 0,
            component_threshold: DEFAULT_COMPONENT_THRESHOLD,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_threshold(mut self, threshold: usize) -> Self {
        self.component_threshold = threshold;
        self
    }

    /// The three-letter prefix, e.g. `EFS`.
    pub fn base(&self) -> String {
        format!(
            "{}{}{}",
            if self.use_additional { 'E' } else { 'R' },
            if self.keep_hierarchy { 'H' } else { 'F' },
            if self.split { 'S' } else { 'W' }
        )
    }

    /// Method code such as `RHW_all` or `EFS_k`.
    pub fn code(&self) -> String {
        format!("{}_{}", self.base(), self.scope.suffix())
    }

    /// Parses a three-letter prefix (`RFW`, `EHS`, ...).
    pub fn parse_base(base: &str, scope: Scope) -> Result<Self> {
        let bad = || Error::InvalidMethod(base.to_string());
        let b = base.as_bytes();
        if b.len() != 3 {
            return Err(bad());
        }
        let flag = |c: u8, yes: u8, no: u8| match c {
            c if c == yes => Ok(true),
            c if c == no => Ok(false),
            _ => Err(bad()),
        };
        Ok(ExtractionMethod::new(
            flag(b[0], b'E', b'R')?,
            flag(b[1], b'H', b'F')?,
            flag(b[2], b'S', b'W')?,
            scope,
        ))
    }

    /// The sixteen methods, top-k variants using `k`. Hierarchy is only kept
    /// together with the `all` scope.
    pub fn all_methods(k: usize) -> Vec<ExtractionMethod> {
        let mut out = Vec::with_capacity(16);
        for split in [false, true] {
            for use_additional in [false, true] {
                out.push(ExtractionMethod::new(use_additional, true, split, Scope::All));
                for scope in [Scope::All, Scope::StreetsOnly, Scope::TopK] {
                    out.push(ExtractionMethod::new(use_additional, false, split, scope).with_k(k));
                }
            }
        }
        out
    }

    /// Whether the code is one of the sixteen methods.
    pub fn is_standard(&self) -> bool {
        !self.keep_hierarchy || self.scope == Scope::All
    }
}

impl fmt::Display for ExtractionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for ExtractionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, suffix) = s.split_once('_').ok_or_else(|| Error::InvalidMethod(s.to_string()))?;
        let scope = match suffix {
            "all" => Scope::All,
            "streets" => Scope::StreetsOnly,
            "k" => Scope::TopK,
            _ => return Err(Error::InvalidMethod(s.to_string())),
        };
        ExtractionMethod::parse_base(base, scope)
            .ok()
            .filter(ExtractionMethod::is_standard)
            .ok_or_else(|| Error::InvalidMethod(s.to_string()))
    }
}

/// Counters describing what a pipeline run dropped or defaulted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractionReport {
    /// Objects removed as non-punctual.
    pub removed_objects: usize,
    /// Objects replaced by their segments.
    pub split_objects: usize,
    /// Relation endpoints bound to a first segment for lack of `target_segment`.
    pub default_bindings: usize,
    /// Segment vertices removed by leaf pruning.
    pub pruned_segments: usize,
    pub additional_added: usize,
    /// Additional relations whose endpoint did not survive.
    pub additional_skipped: usize,
    pub components_removed: usize,
    pub vertices_removed_by_threshold: usize,
}

/// One vertex per object involved in a primary relation, one edge per
/// normalized primary relation. `Egal` objects are merged first if needed.
pub fn build_full_graph(db: &Database) -> Result<ConfrontGraph> {
    if db.has_egal() {
        return build_full_graph(&merge_equal_objects(db)?);
    }
    let mut b = GraphBuilder::new();
    b.property_baseline = db.property_baseline();
    for rel in db.relations().iter().filter(|r| r.is_primary()) {
        let (source, target) = endpoints(db, rel);
        let ty = normalize_relation_type(rel.raw_type, target)?;
        b.add_vertex(Vertex::whole(source));
        b.add_vertex(Vertex::whole(target));
        b.add_edge(&source.id, &target.id, ty, EdgeOrigin::Primary, Some(rel.id.clone()));
    }
    Ok(b.build())
}

fn endpoints<'a>(db: &'a Database, rel: &RelationRecord) -> (&'a SpatialObject, &'a SpatialObject) {
    // endpoints were checked when the database was built
    (db.object(&rel.source_id).unwrap(), db.object(&rel.target_id).unwrap())
}

/// Drops every `InsideOf` / `OutsideOf` edge; vertices stay.
pub fn filter_hierarchy(g: &ConfrontGraph) -> ConfrontGraph {
    g.retain_edges(|e| !e.ty.is_hierarchical())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Keep,
    Remove,
    Split,
}

/// Streets ordered for top-k treatment: longest first, ties and unmeasured
/// punctual streets by id. Non-punctual streets must carry a length.
pub fn rank_streets<'a>(streets: impl IntoIterator<Item = &'a SpatialObject>) -> Result<Vec<&'a SpatialObject>> {
    let mut ranked: Vec<&SpatialObject> = streets.into_iter().collect();
    for s in &ranked {
        if s.length_m.is_none() && !s.dim.is_punctual() {
            return Err(Error::MissingLength(s.id.clone()));
        }
    }
    ranked.sort_by(|a, b| {
        let la = a.length_m.unwrap_or(f64::NEG_INFINITY);
        let lb = b.length_m.unwrap_or(f64::NEG_INFINITY);
        lb.total_cmp(&la).then_with(|| a.id.cmp(&b.id))
    });
    Ok(ranked)
}

fn plan(g: &ConfrontGraph, db: &Database, method: &ExtractionMethod) -> Result<HashMap<String, Action>> {
    let objects: Vec<&SpatialObject> = g
        .vertices()
        .iter()
        .filter(|v| !v.is_segment())
        .filter_map(|v| db.object(&v.object_id))
        .collect();
    let mut actions = HashMap::new();
    let split_or_fail = |o: &SpatialObject| {
        if o.segments.is_empty() {
            Err(Error::MissingSegments(o.id.clone()))
        } else {
            Ok(Action::Split)
        }
    };
    let top: HashSet<&str> = if method.scope == Scope::TopK {
        rank_streets(objects.iter().copied().filter(|o| o.is_street()))?
            .into_iter()
            .take(method.k)
            .map(|o| o.id.as_str())
            .collect()
    } else {
        HashSet::new()
    };
    for o in objects {
        let action = match method.scope {
            _ if o.dim.is_punctual() && !top.contains(o.id.as_str()) => Action::Keep,
            Scope::All if !method.split => Action::Keep,
            // objects that cannot be split are kept whole
            Scope::All if o.segments.is_empty() => Action::Keep,
            Scope::All => Action::Split,
            Scope::StreetsOnly | Scope::TopK if !o.is_street() => Action::Remove,
            Scope::StreetsOnly if method.split => split_or_fail(o)?,
            Scope::StreetsOnly => Action::Keep,
            Scope::TopK if !top.contains(o.id.as_str()) => Action::Keep,
            Scope::TopK if !method.split => Action::Remove,
            // a punctual street has nothing to split
            Scope::TopK if o.dim.is_punctual() => Action::Keep,
            Scope::TopK => split_or_fail(o)?,
        };
        actions.insert(o.id.clone(), action);
    }
    Ok(actions)
}

/// Removes, keeps or splits non-punctual objects according to the method's
/// scope, then prunes dangling segments.
pub fn handle_nonpunctual(
    g: &ConfrontGraph,
    db: &Database,
    method: &ExtractionMethod,
    report: &mut ExtractionReport,
) -> Result<ConfrontGraph> {
    let actions = plan(g, db, method)?;
    let action = |object: &str| actions.get(object).copied().unwrap_or(Action::Keep);
    let relations: HashMap<&str, &RelationRecord> = db.relations().iter().map(|r| (r.id.as_str(), r)).collect();

    let mut b = GraphBuilder::new();
    b.method = g.method.clone();
    b.property_baseline = g.property_baseline;
    for v in g.vertices() {
        match action(&v.object_id) {
            Action::Keep => b.add_vertex(v.clone()),
            Action::Remove => report.removed_objects += 1,
            Action::Split => {
                report.split_objects += 1;
                let obj = db.object(&v.object_id).expect("vertex object in database");
                for s in &obj.segments {
                    b.add_vertex(Vertex::segment(obj, &s.id));
                }
                for pair in obj.segments.windows(2) {
                    b.add_edge(
                        &segment_vertex_id(&obj.id, &pair[0].id),
                        &segment_vertex_id(&obj.id, &pair[1].id),
                        NormalizedType::ArtificialAdjacency,
                        EdgeOrigin::Artificial,
                        None,
                    );
                }
            }
        }
    }

    let vs = g.vertices();
    for e in g.edges() {
        let (sv, tv) = (&vs[e.source], &vs[e.target]);
        if action(&sv.object_id) == Action::Remove || action(&tv.object_id) == Action::Remove {
            continue;
        }
        if e.relations.is_empty() {
            b.add_edge(&sv.id, &tv.id, e.ty, e.origin, None);
            continue;
        }
        for rel_id in &e.relations {
            let rel = relations[rel_id.as_str()];
            let mut bind = |v: &Vertex, segment: Option<&str>| -> String {
                if action(&v.object_id) != Action::Split || v.is_segment() {
                    return v.id.clone();
                }
                let obj = db.object(&v.object_id).unwrap();
                let seg = match segment {
                    Some(s) => s,
                    None => {
                        report.default_bindings += 1;
                        &obj.segments[0].id
                    }
                };
                segment_vertex_id(&obj.id, seg)
            };
            let s = bind(sv, None);
            let t = bind(tv, rel.target_segment.as_deref());
            b.add_edge(&s, &t, e.ty, e.origin, Some(rel_id.clone()));
        }
    }

    let split = b.build();
    Ok(prune_segments(&split, report))
}

/// Repeatedly removes every segment vertex whose only incident edge is a
/// single artificial adjacency, all such vertices of a round at once.
pub fn prune_segments(g: &ConfrontGraph, report: &mut ExtractionReport) -> ConfrontGraph {
    let mut g = g.clone();
    loop {
        let total = g.incident_counts();
        let mut artificial = vec![0usize; g.vertex_count()];
        for e in g.edges().iter().filter(|e| e.ty == NormalizedType::ArtificialAdjacency) {
            artificial[e.source] += 1;
            artificial[e.target] += 1;
        }
        let doomed: Vec<bool> = g
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, v)| v.is_segment() && total[i] == 1 && artificial[i] == 1)
            .collect();
        let count = doomed.iter().filter(|&&d| d).count();
        if count == 0 {
            return g;
        }
        report.pruned_segments += count;
        g = g.induced_subgraph(|i| !doomed[i]);
    }
}

/// Adds each additional relation whose endpoints survive as a `RelatedTo`
/// edge of additional origin.
pub fn inject_additional(g: &ConfrontGraph, db: &Database, report: &mut ExtractionReport) -> ConfrontGraph {
    let mut b = g.to_builder();
    let resolve = |object: &str, segment: Option<&str>| -> Option<String> {
        if g.vertex_index(object).is_some() {
            return Some(object.to_string());
        }
        let obj = db.object(object)?;
        let seg = segment.or_else(|| obj.segments.first().map(|s| s.id.as_str()))?;
        let id = segment_vertex_id(object, seg);
        g.vertex_index(&id).map(|_| id)
    };
    for rel in db.relations().iter().filter(|r| !r.is_primary()) {
        let ends = (
            resolve(&rel.source_id, None),
            resolve(&rel.target_id, rel.target_segment.as_deref()),
        );
        match ends {
            (Some(s), Some(t)) => {
                b.add_edge(&s, &t, NormalizedType::RelatedTo, EdgeOrigin::Additional, Some(rel.id.clone()));
                report.additional_added += 1;
            }
            _ => report.additional_skipped += 1,
        }
    }
    b.build()
}

/// Deletes every component of the undirected view with fewer than
/// `threshold` vertices.
pub fn filter_components(g: &ConfrontGraph, threshold: usize, report: &mut ExtractionReport) -> Result<ConfrontGraph> {
    let threshold = threshold.max(1);
    let (labels, count) = g.simple().components();
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        sizes[l] += 1;
    }
    let kept = g.induced_subgraph(|i| sizes[labels[i]] >= threshold);
    report.components_removed += sizes.iter().filter(|&&s| s < threshold).count();
    report.vertices_removed_by_threshold += g.vertex_count() - kept.vertex_count();
    if kept.vertex_count() == 0 {
        return Err(Error::EmptyResult { threshold });
    }
    Ok(kept)
}

/// Runs the full pipeline for one method.
pub fn extract(db: &Database, method: &ExtractionMethod) -> Result<ConfrontGraph> {
    extract_with_report(db, method).map(|(g, _)| g)
}

pub fn extract_with_report(db: &Database, method: &ExtractionMethod) -> Result<(ConfrontGraph, ExtractionReport)> {
    let merged;
    let db = if db.has_egal() {
        merged = merge_equal_objects(db)?;
        &merged
    } else {
        db
    };
    let mut report = ExtractionReport::default();
    let g = extract_stages(db, method, &mut report)?;
    Ok((g, report))
}

fn extract_stages(db: &Database, method: &ExtractionMethod, report: &mut ExtractionReport) -> Result<ConfrontGraph> {
    let mut g = build_full_graph(db)?;
    g.method = Some(method.clone());
    if !method.keep_hierarchy {
        g = filter_hierarchy(&g);
    }
    g = handle_nonpunctual(&g, db, method, report)?;
    if method.use_additional {
        g = inject_additional(&g, db, report);
    }
    filter_components(&g, method.component_threshold, report)
}

/// Graph after every stage but the component filter; used to check removal
/// monotonicity.
pub fn extract_unfiltered(db: &Database, method: &ExtractionMethod) -> Result<ConfrontGraph> {
    extract_with_report(db, &method.clone().with_threshold(1)).map(|(g, _)| g)
}
