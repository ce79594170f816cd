//! Graph statistics: order, size, density, property coverage, components,
//! finite diameter, harmonic mean distance, and the rank correlation between
//! hop distance and planar distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConfrontGraph, SimpleGraph, UNREACHABLE};
use crate::model::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    /// Edges of the collapsed undirected view.
    pub m: usize,
    /// Typed directed edges, artificial ones included.
    pub typed_edges: usize,
    pub delta: f64,
    pub property_count: usize,
    pub property_coverage: f64,
    pub components: usize,
    /// `None` when no pair is connected.
    pub d_max: Option<u32>,
    /// `None` for fewer than two vertices; infinite when nothing is connected.
    pub d_harm: Option<f64>,
    /// `None` when fewer than two vertices have coordinates or a rank
    /// series is constant.
    pub rho_d: Option<f64>,
}

/// `m / (n (n - 1))`, zero below two vertices.
pub fn density(n: usize, m: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        m as f64 / (n as f64 * (n as f64 - 1.0))
    }
}

/// Dense hop-distance table, row-major; [`UNREACHABLE`] marks infinite
/// entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<u32>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[u32] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    /// Distance as a float, infinite for unreachable pairs.
    pub fn hops(&self, u: usize, v: usize) -> f64 {
        match self.get(u, v) {
            UNREACHABLE => f64::INFINITY,
            d => d as f64,
        }
    }
}

/// One breadth-first search per source, run in parallel.
pub fn all_pairs_graph_distance(g: &SimpleGraph) -> DistanceMatrix {
    let n = g.n();
    let rows: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| g.bfs(s)).collect();
    DistanceMatrix {
        n,
        data: rows.concat(),
    }
}

/// Largest finite distance between distinct vertices.
pub fn finite_diameter(d: &DistanceMatrix) -> Result<u32> {
    (0..d.n())
        .flat_map(|u| d.row(u)[u + 1..].iter().copied())
        .filter(|&x| x != UNREACHABLE)
        .max()
        .ok_or(Error::NoFinitePairs)
}

/// `P / sum(1/d)` over the `P = n(n-1)/2` unordered pairs, unreachable pairs
/// adding nothing to the sum. Infinite when no pair is connected, `None` for
/// fewer than two vertices.
pub fn harmonic_mean_distance(d: &DistanceMatrix) -> Option<f64> {
    let n = d.n();
    if n < 2 {
        return None;
    }
    let inverse: f64 = (0..n)
        .into_par_iter()
        .map(|u| {
            d.row(u)[u + 1..]
                .iter()
                .filter(|&&x| x != UNREACHABLE)
                .map(|&x| 1.0 / x as f64)
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    Some(if inverse == 0.0 { f64::INFINITY } else { pairs / inverse })
}

/// Ranks starting at 1, tied values sharing the mean of their positions.
/// Infinite values are equal to each other and rank above everything else.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateRanks);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho with tie-averaged ranks. `x` may hold infinities.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    assert_eq!(x.len(), y.len(), "paired series");
    if x.len() < 2 {
        return Err(Error::InsufficientCoordinates);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Vertices with coordinates, as `(index, point)`.
fn located(g: &ConfrontGraph) -> Vec<(usize, Point)> {
    g.vertices()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.coord.map(|p| (i, p)))
        .collect()
}

/// Hop and planar distance for every unordered pair of located vertices.
fn located_pairs(g: &ConfrontGraph, d: &DistanceMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let pts = located(g);
    if pts.len() < 2 {
        return Err(Error::InsufficientCoordinates);
    }
    let mut hops = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    let mut space = Vec::with_capacity(hops.capacity());
    for (a, &(u, pu)) in pts.iter().enumerate() {
        for &(v, pv) in &pts[a + 1..] {
            hops.push(d.hops(u, v));
            space.push(pu.distance(&pv));
        }
    }
    Ok((hops, space))
}

pub fn spearman_distance_correlation(g: &ConfrontGraph) -> Result<f64> {
    let d = all_pairs_graph_distance(&g.simple());
    spearman_with(g, &d)
}

fn spearman_with(g: &ConfrontGraph, d: &DistanceMatrix) -> Result<f64> {
    let (hops, space) = located_pairs(g, d)?;
    spearman_rho(&hops, &space)
}

/// Full statistic set. `baseline` is the coverage denominator; a zero
/// baseline gives zero coverage.
pub fn summarize(g: &ConfrontGraph, baseline: usize) -> Result<GraphSummary> {
    let simple = g.simple();
    let n = simple.n();
    let m = simple.m();
    let d = all_pairs_graph_distance(&simple);
    let property_count = g.property_count();
    let rho_d = match spearman_with(g, &d) {
        Ok(r) => Some(r),
        Err(Error::InsufficientCoordinates | Error::DegenerateRanks) => None,
        Err(e) => return Err(e),
    };
    Ok(GraphSummary {
        n,
        m,
        typed_edges: g.edge_count(),
        delta: density(n, m),
        property_count,
        property_coverage: if baseline == 0 {
            0.0
        } else {
            property_count as f64 / baseline as f64
        },
        components: simple.components().1,
        d_max: finite_diameter(&d).ok(),
        d_harm: harmonic_mean_distance(&d),
        rho_d,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceBucket {
    /// Hop distance; `None` for disconnected pairs.
    pub hops: Option<u32>,
    pub pairs: usize,
    pub mean_m: f64,
    /// Population standard deviation.
    pub std_m: f64,
}

/// Planar distance statistics of located vertex pairs grouped by hop
/// distance, finite buckets ascending then the disconnected bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub buckets: Vec<DistanceBucket>,
}

impl DistanceProfile {
    pub fn total_pairs(&self) -> usize {
        self.buckets.iter().map(|b| b.pairs).sum()
    }

    pub fn bucket(&self, hops: Option<u32>) -> Option<&DistanceBucket> {
        self.buckets.iter().find(|b| b.hops == hops)
    }
}

pub fn distance_profile(g: &ConfrontGraph) -> Result<DistanceProfile> {
    let d = all_pairs_graph_distance(&g.simple());
    let (hops, space) = located_pairs(g, &d)?;
    // (count, sum, sum of squares) per hop value, infinity keyed last
    let mut acc: std::collections::BTreeMap<u32, (usize, f64, f64)> = Default::default();
    for (h, s) in hops.iter().zip(&space) {
        let key = if h.is_infinite() { UNREACHABLE } else { *h as u32 };
        let e = acc.entry(key).or_default();
        e.0 += 1;
        e.1 += s;
        e.2 += s * s;
    }
    let buckets = acc
        .into_iter()
        .map(|(h, (count, sum, sq))| {
            let mean = sum / count as f64;
            let var = (sq / count as f64 - mean * mean).max(0.0);
            DistanceBucket {
                hops: (h != UNREACHABLE).then_some(h),
                pairs: count,
                mean_m: mean,
                std_m: var.sqrt(),
            }
        })
        .collect();
    Ok(DistanceProfile { buckets })
}
