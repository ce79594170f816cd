//! The extracted graph and its collapsed undirected view.
//!
//! [`ConfrontGraph`] keeps the typed, directed edges produced by extraction.
//! Vertices are sorted by id and edges by `(source, target, type)`, so two
//! graphs with the same content are equal and serialize identically.
//! Connectivity, distances and communities all run on [`SimpleGraph`], which
//! merges parallel and antiparallel edges into one undirected edge.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ExtractionMethod;
use crate::model::{Dimensionality, ObjectKind, Point, SpatialObject};
use crate::normalize::NormalizedType;

/// Separator between object id and segment id in segment vertex ids.
pub const SEGMENT_SEPARATOR: char = '#';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeOrigin {
    Primary,
    Additional,
    Artificial,
}

impl EdgeOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeOrigin::Primary => "primary",
            EdgeOrigin::Additional => "additional",
            EdgeOrigin::Artificial => "artificial",
        }
    }
}

impl fmt::Display for EdgeOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EdgeOrigin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "primary" => Ok(EdgeOrigin::Primary),
            "additional" => Ok(EdgeOrigin::Additional),
            "artificial" => Ok(EdgeOrigin::Artificial),
            other => Err(Error::GraphFormat(format!("unknown edge origin `{other}`"))),
        }
    }
}

/// A whole object or one segment of a split object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub object_id: String,
    pub segment_id: Option<String>,
    pub name: String,
    pub kind: ObjectKind,
    pub dim: Dimensionality,
    pub coord: Option<Point>,
    pub parish: Option<String>,
    pub inside_old_walls: Option<bool>,
    pub is_property: bool,
}

impl Vertex {
    pub fn whole(obj: &SpatialObject) -> Self {
        Vertex {
            id: obj.id.clone(),
            object_id: obj.id.clone(),
            segment_id: None,
            name: obj.name.clone(),
            kind: obj.kind,
            dim: obj.dim,
            coord: obj.coord,
            parish: obj.parish.clone(),
            inside_old_walls: obj.inside_old_walls,
            is_property: obj.is_property(),
        }
    }

    /// Vertex for one segment. Only the segment's own coordinates are used;
    /// the object's representative point says nothing about where a piece
    /// lies.
    pub fn segment(obj: &SpatialObject, segment: &str) -> Self {
        let coord = obj.segments.iter().find(|s| s.id == segment).and_then(|s| s.coord);
        Vertex {
            id: segment_vertex_id(&obj.id, segment),
            segment_id: Some(segment.to_string()),
            coord,
            ..Vertex::whole(obj)
        }
    }

    pub fn is_segment(&self) -> bool {
        self.segment_id.is_some()
    }
}

pub fn segment_vertex_id(object: &str, segment: &str) -> String {
    format!("{object}{SEGMENT_SEPARATOR}{segment}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub ty: NormalizedType,
    pub origin: EdgeOrigin,
    /// Ids of the database relations carried by this edge, sorted.
    pub relations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfrontGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    pub method: Option<ExtractionMethod>,
    /// Coverage denominator of the database the graph came from.
    pub property_baseline: usize,
}

impl ConfrontGraph {
    pub fn empty() -> Self {
        ConfrontGraph {
            vertices: Vec::new(),
            edges: Vec::new(),
            method: None,
            property_baseline: 0,
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.id.as_str().cmp(id)).ok()
    }

    pub fn vertex(&self, id: &str) -> Option<&Vertex> {
        self.vertex_index(id).map(|i| &self.vertices[i])
    }

    pub fn property_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.is_property).count()
    }

    /// Number of edges incident to each vertex, either direction.
    pub fn incident_counts(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.source] += 1;
            deg[e.target] += 1;
        }
        deg
    }

    pub fn simple(&self) -> SimpleGraph {
        SimpleGraph::from_edges(self.vertices.len(), self.edges.iter().map(|e| (e.source, e.target)))
    }

    /// Subgraph induced by the vertices for which `keep` holds.
    pub fn induced_subgraph(&self, keep: impl Fn(usize) -> bool) -> ConfrontGraph {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if keep(i) {
                remap[i] = vertices.len();
                vertices.push(v.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| remap[e.source] != usize::MAX && remap[e.target] != usize::MAX)
            .map(|e| Edge {
                source: remap[e.source],
                target: remap[e.target],
                ..e.clone()
            })
            .collect();
        // order is preserved by the monotone remapping
        ConfrontGraph {
            vertices,
            edges,
            method: self.method.clone(),
            property_baseline: self.property_baseline,
        }
    }

    pub fn retain_edges(&self, keep: impl Fn(&Edge) -> bool) -> ConfrontGraph {
        ConfrontGraph {
            vertices: self.vertices.clone(),
            edges: self.edges.iter().filter(|e| keep(e)).cloned().collect(),
            method: self.method.clone(),
            property_baseline: self.property_baseline,
        }
    }

    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new();
        for v in &self.vertices {
            b.add_vertex(v.clone());
        }
        for e in &self.edges {
            let (s, t) = (&self.vertices[e.source].id, &self.vertices[e.target].id);
            for rel in &e.relations {
                b.add_edge(s, t, e.ty, e.origin, Some(rel.clone()));
            }
            if e.relations.is_empty() {
                b.add_edge(s, t, e.ty, e.origin, None);
            }
        }
        b.method = self.method.clone();
        b.property_baseline = self.property_baseline;
        b
    }
}

/// Accumulates vertices and edges keyed by vertex id, then sorts them into a
/// [`ConfrontGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: BTreeMap<String, Vertex>,
    edges: BTreeMap<(String, String, NormalizedType), (EdgeOrigin, Vec<String>)>,
    pub method: Option<ExtractionMethod>,
    pub property_baseline: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a vertex unless one with the same id exists.
    pub fn add_vertex(&mut self, v: Vertex) {
        self.vertices.entry(v.id.clone()).or_insert(v);
    }

    pub fn remove_vertex(&mut self, id: &str) {
        self.vertices.remove(id);
    }

    pub fn contains_vertex(&self, id: &str) -> bool {
        self.vertices.contains_key(id)
    }

    /// Adds a typed edge. A second edge with the same `(source, target, type)`
    /// keeps the first origin and only contributes its relation id.
    /// Self-loops are ignored; returns whether a new edge was created.
    pub fn add_edge(
        &mut self,
        source: &str,
        target: &str,
        ty: NormalizedType,
        origin: EdgeOrigin,
        relation: Option<String>,
    ) -> bool {
        if source == target {
            return false;
        }
        let key = (source.to_string(), target.to_string(), ty);
        let fresh = !self.edges.contains_key(&key);
        let entry = self.edges.entry(key).or_insert_with(|| (origin, Vec::new()));
        if let Some(rel) = relation {
            if let Err(pos) = entry.1.binary_search(&rel) {
                entry.1.insert(pos, rel);
            }
        }
        fresh
    }

    /// Builds the graph. Panics if an edge names a missing vertex.
    pub fn build(self) -> ConfrontGraph {
        let vertices: Vec<Vertex> = self.vertices.into_values().collect();
        let index: std::collections::HashMap<&str, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let edges = self
            .edges
            .into_iter()
            .map(|((s, t, ty), (origin, relations))| Edge {
                source: index[s.as_str()],
                target: index[t.as_str()],
                ty,
                origin,
                relations,
            })
            .collect();
        ConfrontGraph {
            vertices,
            edges,
            method: self.method,
            property_baseline: self.property_baseline,
        }
    }
}

/// Undirected simple graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

/// Marker for unreachable pairs in hop-distance vectors.
pub const UNREACHABLE: u32 = u32::MAX;

impl SimpleGraph {
    /// Collapses arbitrary directed pairs: self-loops dropped, `(a,b)` and
    /// `(b,a)` merged, duplicates removed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut deg = vec![0usize; n];
        for &(a, b) in &pairs {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(a, b) in &pairs {
            neighbors[fill[a]] = b;
            fill[a] += 1;
            neighbors[fill[b]] = a;
            fill[b] += 1;
        }
        // pairs are sorted, so each adjacency list is sorted already
        SimpleGraph { offsets, neighbors }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edge_list(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |a| self.neighbors(a).iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// Hop distances from `source`; [`UNREACHABLE`] for other components.
    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.n()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &w in self.neighbors(u) {
                if dist[w] == UNREACHABLE {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Component label per vertex (labels in order of lowest member) and the
    /// number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }
}
