//! Seeded synthetic inputs for tests, benchmarks and the acceptance suite.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{ConfrontGraph, EdgeOrigin, GraphBuilder, SimpleGraph, Vertex};
use crate::model::{Database, Dimensionality, ObjectKind, RelationRecord, SpatialObject};
use crate::normalize::{NormalizedType, RawRelation};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vertex id of index `i` in generated graphs; zero-padded so that id order
/// equals index order.
pub fn vertex_name(i: usize) -> String {
    format!("v{i:06}")
}

/// Property vertices `v000000..` with optional coordinates and one
/// `RelatedTo` edge per pair.
pub fn graph_from_edges(coords: &[Option<(f64, f64)>], edges: &[(usize, usize)]) -> ConfrontGraph {
    let mut b = GraphBuilder::new();
    for (i, c) in coords.iter().enumerate() {
        let mut o = SpatialObject::new(vertex_name(i), ObjectKind::Property, Dimensionality::Punctual);
        if let Some((x, y)) = c {
            o = o.with_coord(*x, *y);
        }
        b.add_vertex(Vertex::whole(&o));
    }
    for &(s, t) in edges {
        b.add_edge(&vertex_name(s), &vertex_name(t), NormalizedType::RelatedTo, EdgeOrigin::Primary, None);
    }
    b.build()
}

/// Erdos-Renyi pairs `(a, b)` with `a < b`.
pub fn random_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Planted partition: `blocks` groups of `size` vertices, intra-group pairs
/// linked with `p_in`, others with `p_out`. Returns the graph and the
/// planted block of each vertex.
pub fn planted_partition(blocks: usize, size: usize, p_in: f64, p_out: f64, seed: u64) -> (SimpleGraph, Vec<usize>) {
    let mut r = rng(seed);
    let n = blocks * size;
    let truth: Vec<usize> = (0..n).map(|v| v / size).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if truth[a] == truth[b] { p_in } else { p_out };
            if r.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    (SimpleGraph::from_edges(n, edges), truth)
}

#[derive(Debug, Clone)]
pub struct DatabaseParams {
    pub properties: usize,
    pub streets: usize,
    pub parishes: usize,
    pub gates: usize,
    pub edifices: usize,
    /// Primary relations issued per property.
    pub relations_per_property: usize,
    /// Share of non-punctual streets that declare segments.
    pub street_segment_share: f64,
    /// Share of street-bound relations naming their segment.
    pub bound_share: f64,
    pub egal_pairs: usize,
    pub additional: usize,
    /// Planar extent of the coordinates, in meters.
    pub extent: f64,
}

impl Default for DatabaseParams {
    fn default() -> Self {
        DatabaseParams {
            properties: 120,
            streets: 12,
            parishes: 3,
            gates: 2,
            edifices: 4,
            relations_per_property: 2,
            street_segment_share: 1.0,
            bound_share: 0.6,
            egal_pairs: 3,
            additional: 10,
            extent: 1000.0,
        }
    }
}

/// Random but valid database: every non-punctual street is measured, split
/// objects have 2 to 5 segments, no self-loops, additional relations only
/// between streets or from edifices to streets.
pub fn random_database(seed: u64, p: &DatabaseParams) -> Database {
    let mut r = rng(seed);
    let mut objects = Vec::new();
    let coord = |r: &mut ChaCha8Rng| (r.random_range(0.0..p.extent), r.random_range(0.0..p.extent));

    let parishes: Vec<String> = (0..p.parishes).map(|i| format!("Z{i:03}")).collect();
    for id in &parishes {
        let (x, y) = coord(&mut r);
        objects.push(SpatialObject::new(id.clone(), ObjectKind::ParishOrSector, Dimensionality::Surface).with_coord(x, y));
    }

    let mut streets = Vec::new();
    for i in 0..p.streets {
        let id = format!("S{i:03}");
        let dim = match r.random_range(0..10) {
            0 => Dimensionality::Punctual,
            1 => Dimensionality::Surface,
            _ => Dimensionality::Linear,
        };
        let mut s = SpatialObject::new(id.clone(), ObjectKind::Street, dim);
        s.name = format!("rue {i}");
        if !dim.is_punctual() {
            s = s.with_length(r.random_range(20.0..800.0));
            if r.random_bool(p.street_segment_share) {
                let count = r.random_range(2..=5);
                s = s.with_segments((0..count).map(|j| format!("{id}s{j}")));
                for seg in &mut s.segments {
                    if r.random_bool(0.7) {
                        let (x, y) = coord(&mut r);
                        seg.coord = Some(crate::model::Point::new(x, y));
                    }
                }
            }
        }
        if r.random_bool(0.8) {
            let (x, y) = coord(&mut r);
            s = s.with_coord(x, y);
        }
        objects.push(s);
        streets.push(id);
    }

    let mut gates = Vec::new();
    for i in 0..p.gates {
        let id = format!("G{i:03}");
        let (x, y) = coord(&mut r);
        objects.push(SpatialObject::new(id.clone(), ObjectKind::Gate, Dimensionality::Punctual).with_coord(x, y));
        gates.push(id);
    }

    let mut edifices = Vec::new();
    for i in 0..p.edifices {
        let id = format!("E{i:03}");
        let dim = if r.random_bool(0.5) {
            Dimensionality::Surface
        } else {
            Dimensionality::Punctual
        };
        let (x, y) = coord(&mut r);
        objects.push(SpatialObject::new(id.clone(), ObjectKind::Edifice, dim).with_coord(x, y));
        edifices.push(id);
    }

    let mut properties = Vec::new();
    for i in 0..p.properties {
        let id = format!("P{i:04}");
        let mut o = SpatialObject::new(id.clone(), ObjectKind::Property, Dimensionality::Punctual);
        if r.random_bool(0.85) {
            let (x, y) = coord(&mut r);
            o = o.with_coord(x, y);
        }
        if !parishes.is_empty() {
            o.parish = Some(parishes.choose(&mut r).unwrap().clone());
        }
        o.inside_old_walls = Some(r.random_bool(0.6));
        o.declared = Some(r.random_bool(0.8));
        objects.push(o);
        properties.push(id);
    }

    let by_id: std::collections::HashMap<String, SpatialObject> =
        objects.iter().map(|o| (o.id.clone(), o.clone())).collect();
    let semantic: Vec<RawRelation> = RawRelation::ALL.iter().copied().filter(|t| *t != RawRelation::Egal).collect();
    let mut relations = Vec::new();
    let mut next = 0usize;
    let mut new_id = || {
        next += 1;
        format!("R{next:05}")
    };

    for source in &properties {
        for _ in 0..p.relations_per_property {
            let pool: &Vec<String> = match r.random_range(0..10) {
                0..=3 => &properties,
                4..=6 => &streets,
                7 => &parishes,
                8 => &gates,
                _ => &edifices,
            };
            let Some(target) = pool.choose(&mut r) else { continue };
            if target == source {
                continue;
            }
            let raw = *semantic.choose(&mut r).unwrap();
            let mut rel = RelationRecord::new(new_id(), source.clone(), target.clone(), raw);
            let t = &by_id[target];
            if !t.segments.is_empty() && r.random_bool(p.bound_share) {
                rel = rel.on_segment(t.segments.choose(&mut r).unwrap().id.clone());
            }
            relations.push(rel);
        }
    }

    for _ in 0..p.egal_pairs {
        if properties.len() < 2 {
            break;
        }
        let pair: Vec<&String> = properties.choose_multiple(&mut r, 2).collect();
        relations.push(RelationRecord::new(new_id(), pair[0].clone(), pair[1].clone(), RawRelation::Egal));
    }

    for _ in 0..p.additional {
        if streets.len() < 2 {
            break;
        }
        let source = if !edifices.is_empty() && r.random_bool(0.3) {
            edifices.choose(&mut r).unwrap().clone()
        } else {
            streets.choose(&mut r).unwrap().clone()
        };
        let target = streets.choose(&mut r).unwrap().clone();
        if source == target {
            continue;
        }
        let mut rel = RelationRecord::new(new_id(), source, target.clone(), RawRelation::Iuxta).additional();
        let t = &by_id[&target];
        if !t.segments.is_empty() && r.random_bool(p.bound_share) {
            rel = rel.on_segment(t.segments.choose(&mut r).unwrap().id.clone());
        }
        relations.push(rel);
    }

    Database::new(objects, relations).expect("generated database is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_database_is_deterministic() {
        let p = DatabaseParams::default();
        let a = random_database(7, &p);
        let b = random_database(7, &p);
        assert_eq!(a, b);
        assert!(a.relations().len() > p.properties);
        assert!(a.property_baseline() <= p.properties);
    }

    #[test]
    fn planted_partition_sizes() {
        let (g, truth) = planted_partition(4, 25, 0.3, 0.02, 1);
        assert_eq!(g.n(), 100);
        assert_eq!(truth.iter().filter(|&&b| b == 3).count(), 25);
    }
}
