//! Independent reference implementations shared by the integration tests and
//! the acceptance runner. Nothing here calls the code under test except to
//! obtain its output.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use confront_core::export::to_graphml;
use confront_core::extract::{extract_unfiltered, prune_segments, ExtractionReport};
use confront_core::graph::EdgeOrigin;
use confront_core::{
    extract, merge_equal_objects, ConfrontGraph, Database, ExtractionMethod, NormalizedType, RawRelation, Scope,
    SweepPoint,
};

/// Hop distances from every source, by queue-based search over an adjacency
/// matrix. `None` marks unreachable pairs.
pub fn bfs_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<u32>>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let du = dist[u].unwrap();
                for v in 0..n {
                    if adj[u][v] && dist[v].is_none() {
                        dist[v] = Some(du + 1);
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Direct evaluation of `P / sum 1/d` over unordered pairs.
pub fn harmonic_oracle(dist: &[Vec<Option<u32>>]) -> f64 {
    let n = dist.len();
    let mut pairs = 0.0;
    let mut inverse = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            pairs += 1.0;
            if let Some(d) = dist[u][v] {
                inverse += 1.0 / d as f64;
            }
        }
    }
    if inverse == 0.0 {
        f64::INFINITY
    } else {
        pairs / inverse
    }
}

/// Rank of each value as `1 + #smaller + (#equal - 1) / 2`, infinities equal
/// among themselves and above every finite value.
pub fn brute_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&x| {
            let less = values.iter().filter(|&&y| y < x).count() as f64;
            let equal = values.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson_oracle(&brute_ranks(x), &brute_ranks(y))
}

/// Indices of points no other point beats on one objective without losing
/// on the other.
pub fn pareto_oracle(points: &[SweepPoint]) -> BTreeSet<usize> {
    let dominates = |q: &SweepPoint, p: &SweepPoint| {
        let (qr, pr) = (q.rho_or_min(), p.rho_or_min());
        q.coverage >= p.coverage && qr >= pr && (q.coverage > p.coverage || qr > pr)
    };
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i])))
        .collect()
}

/// `1/2m * sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j]` over the simple
/// undirected graph.
pub fn modularity_oracle(n: usize, edges: &[(usize, usize)], labels: &[usize]) -> f64 {
    let mut adj = vec![vec![0.0f64; n]; n];
    for &(a, b) in edges {
        if a != b {
            adj[a][b] = 1.0;
            adj[b][a] = 1.0;
        }
    }
    let k: Vec<f64> = adj.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += adj[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Canonical id of every object under the `Egal` relation: smallest id of
/// its connected class, found by depth-first search.
pub fn egal_classes(db: &Database) -> BTreeMap<String, String> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in db.relations().iter().filter(|r| r.raw_type == RawRelation::Egal) {
        adj.entry(&r.source_id).or_default().push(&r.target_id);
        adj.entry(&r.target_id).or_default().push(&r.source_id);
    }
    let mut out = BTreeMap::new();
    for o in db.objects() {
        if out.contains_key(&o.id) {
            continue;
        }
        let mut class = vec![o.id.as_str()];
        let mut stack = vec![o.id.as_str()];
        let mut seen = BTreeSet::from([o.id.as_str()]);
        while let Some(u) = stack.pop() {
            for &v in adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(v) {
                    class.push(v);
                    stack.push(v);
                }
            }
        }
        let canon = class.iter().min().unwrap().to_string();
        for id in class {
            out.insert(id.to_string(), canon.clone());
        }
    }
    out
}

/// Objects present in a graph, whole or as segments.
fn graph_objects(g: &ConfrontGraph) -> BTreeSet<&str> {
    g.vertices().iter().map(|v| v.object_id.as_str()).collect()
}

fn hierarchy_free(g: &ConfrontGraph) -> bool {
    g.edges().iter().all(|e| !e.ty.is_hierarchical())
}

fn additional_free(g: &ConfrontGraph) -> bool {
    g.edges().iter().all(|e| e.origin != EdgeOrigin::Additional)
}

/// No segment vertex hangs on a single artificial edge.
fn pruning_fixpoint(g: &ConfrontGraph) -> bool {
    let mut report = ExtractionReport::default();
    prune_segments(g, &mut report);
    report.pruned_segments == 0
}

/// Every primary relation whose endpoint objects both survive and whose type
/// the method keeps appears on exactly one edge, between vertices of its own
/// endpoint objects and with its own normalized type. Every relation id on
/// an edge is accounted for.
fn conserves_relations(g: &ConfrontGraph, merged: &Database, method: &ExtractionMethod) -> Result<(), String> {
    let present = graph_objects(g);
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let vs = g.vertices();
    for e in g.edges() {
        let (s, t) = (&vs[e.source], &vs[e.target]);
        for id in &e.relations {
            *seen.entry(id.as_str()).or_default() += 1;
            let Some(rel) = merged.relations().iter().find(|r| &r.id == id) else {
                return Err(format!("edge carries unknown relation {id}"));
            };
            if (rel.source_id.as_str(), rel.target_id.as_str()) != (s.object_id.as_str(), t.object_id.as_str()) {
                return Err(format!("relation {id} sits between {} and {}", s.id, t.id));
            }
            if !rel.is_primary() {
                if e.origin != EdgeOrigin::Additional && e.ty != NormalizedType::RelatedTo {
                    return Err(format!("additional relation {id} on a {:?} edge", e.ty));
                }
                continue;
            }
            let target = merged.object(&rel.target_id).unwrap();
            let ty = confront_core::normalize_relation_type(rel.raw_type, target).unwrap();
            if ty != e.ty {
                return Err(format!("relation {id} typed {:?}, edge {:?}", ty, e.ty));
            }
        }
    }
    for rel in merged.relations().iter().filter(|r| r.is_primary()) {
        if rel.source_id == rel.target_id {
            continue;
        }
        let target = merged.object(&rel.target_id).unwrap();
        let ty = confront_core::normalize_relation_type(rel.raw_type, target).unwrap();
        let kept_type = method.keep_hierarchy || !ty.is_hierarchical();
        let kept_ends = present.contains(rel.source_id.as_str()) && present.contains(rel.target_id.as_str());
        let expected = usize::from(kept_type && kept_ends);
        let got = seen.get(rel.id.as_str()).copied().unwrap_or(0);
        if got != expected {
            return Err(format!("relation {} on {got} edges, expected {expected}", rel.id));
        }
    }
    Ok(())
}

fn components_at_least(g: &ConfrontGraph, threshold: usize) -> bool {
    let (labels, count) = g.simple().components();
    let mut sizes = vec![0usize; count];
    for l in labels {
        sizes[l] += 1;
    }
    sizes.iter().all(|&s| s >= threshold)
}

fn vertex_ids(g: &ConfrontGraph) -> BTreeSet<String> {
    g.vertices().iter().map(|v| v.id.clone()).collect()
}

/// Checks every extraction invariant on one database and returns the first
/// violation. Methods whose filtered result is empty are skipped for the
/// filtered checks but still checked unfiltered.
pub fn check_extraction_invariants(db: &Database, k: usize, threshold: usize) -> Result<(), String> {
    // the pipeline only merges when `Egal` relations exist
    let merged = if db.has_egal() {
        merge_equal_objects(db).map_err(|e| e.to_string())?
    } else {
        db.clone()
    };
    for method in ExtractionMethod::all_methods(k) {
        let method = method.with_threshold(threshold);
        let code = method.code();
        let fail = |what: &str| Err(format!("{code}: {what}"));
        let raw = extract_unfiltered(db, &method).map_err(|e| format!("{code}: {e}"))?;
        if !method.keep_hierarchy && !hierarchy_free(&raw) {
            return fail("hierarchical edge in a hierarchy-free graph");
        }
        if !method.use_additional && !additional_free(&raw) {
            return fail("additional edge in a raw-data graph");
        }
        if !pruning_fixpoint(&raw) {
            return fail("dangling segment left after pruning");
        }
        conserves_relations(&raw, &merged, &method).map_err(|e| format!("{code}: {e}"))?;

        match extract(db, &method) {
            Ok(g) => {
                if !components_at_least(&g, threshold) {
                    return fail("component below threshold");
                }
                if !pruning_fixpoint(&g) {
                    return fail("dangling segment after component filter");
                }
                let again = extract(db, &method).map_err(|e| e.to_string())?;
                if to_graphml(&g, None) != to_graphml(&again, None) {
                    return fail("re-run differs");
                }
            }
            Err(confront_core::Error::EmptyResult { .. }) => {}
            Err(e) => return Err(format!("{code}: {e}")),
        }

        if method.scope == Scope::TopK && !method.split {
            let larger = extract_unfiltered(db, &method.clone().with_k(k + 1)).map_err(|e| e.to_string())?;
            if !vertex_ids(&larger).is_subset(&vertex_ids(&raw)) {
                return fail("treating one more street added vertices");
            }
        }
    }
    Ok(())
}
