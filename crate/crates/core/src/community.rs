//! Community detection on the undirected simple view: Louvain with a seeded
//! visiting order, modularity of arbitrary partitions, per-community
//! statistics and the weighted quotient network.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConfrontGraph, SimpleGraph};
use crate::metrics::{summarize, GraphSummary};

pub const DEFAULT_SEED: u64 = 0;

/// Smallest modularity gain that counts as an improvement when moving a
/// vertex; keeps rounding noise from cycling moves.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Community of each vertex, numbered `1..=C` in order of first
    /// appearance along the vertex order.
    pub assignment: Vec<usize>,
    pub modularity: f64,
    pub algorithm: String,
    pub seed: Option<u64>,
    /// Modularity after each Louvain level; empty for external partitions.
    pub level_modularity: Vec<f64>,
}

impl CommunityPartition {
    /// Wraps an externally computed labelling (any label values) and scores
    /// it.
    pub fn from_assignment(g: &ConfrontGraph, labels: &[usize]) -> Result<Self> {
        Self::from_simple(&g.simple(), labels, "external", None)
    }

    fn from_simple(g: &SimpleGraph, labels: &[usize], algorithm: &str, seed: Option<u64>) -> Result<Self> {
        let assignment = contiguous(labels);
        let modularity = modularity_of(g, &assignment)?;
        Ok(CommunityPartition {
            assignment,
            modularity,
            algorithm: algorithm.to_string(),
            seed,
            level_modularity: Vec::new(),
        })
    }

    pub fn community_count(&self) -> usize {
        self.assignment.iter().copied().max().unwrap_or(0)
    }

    /// Vertex indices of each community, index `c - 1` for community `c`.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c - 1].push(v);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members().iter().map(Vec::len).collect()
    }
}

/// Relabels to `1..=C` by first appearance.
fn contiguous(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len() + 1;
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// `sum_c [L_c / m - (d_c / 2m)^2]` on the undirected simple view. Labels
/// may be arbitrary; zero for a graph without edges.
pub fn modularity(g: &ConfrontGraph, p: &CommunityPartition) -> Result<f64> {
    modularity_of(&g.simple(), &p.assignment)
}

pub fn modularity_of(g: &SimpleGraph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.n() {
        return Err(Error::UncoveredVertex {
            covered: labels.len(),
            expected: g.n(),
        });
    }
    let m = g.m() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    let labels = contiguous(labels);
    let c = labels.iter().copied().max().unwrap_or(0);
    let mut inner = vec![0usize; c + 1];
    let mut degree = vec![0usize; c + 1];
    for v in 0..g.n() {
        degree[labels[v]] += g.degree(v);
    }
    for (a, b) in g.edge_list() {
        if labels[a] == labels[b] {
            inner[labels[a]] += 1;
        }
    }
    Ok((1..=c)
        .map(|k| inner[k] as f64 / m - (degree[k] as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Weighted graph of one Louvain level. Self-loop weight counts internal
/// edges once.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
}

impl Level {
    fn from_simple(g: &SimpleGraph) -> Self {
        Level {
            adj: (0..g.n()).map(|v| g.neighbors(v).iter().map(|&w| (w, 1.0)).collect()).collect(),
            self_loop: vec![0.0; g.n()],
        }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self.self_loop[v]
    }

    /// One local-moving phase. Returns the community of each node and
    /// whether any node moved.
    fn local_moving(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.n();
        let k: Vec<f64> = (0..n).map(|v| self.strength(v)).collect();
        let two_m: f64 = k.iter().sum();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = k.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut weight_to = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &v in &order {
                let own = comm[v];
                touched.clear();
                touched.push(own);
                for &(w, wt) in &self.adj[v] {
                    let c = comm[w];
                    // weights are positive, so zero means not seen yet
                    if c != own && weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += wt;
                }
                tot[own] -= k[v];
                let gain = |c: usize, tot: &[f64]| weight_to[c] - tot[c] * k[v] / two_m;
                let mut best = own;
                let mut best_gain = gain(own, &tot);
                for &c in &touched[1..] {
                    let g = gain(c, &tot);
                    if g > best_gain + MIN_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += k[v];
                comm[v] = best;
                if best != own {
                    moved = true;
                    any_move = true;
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
            }
            if !moved {
                break;
            }
        }
        (comm, any_move)
    }

    /// Collapses communities (labels `0..c`) into nodes.
    fn aggregate(&self, comm: &[usize], c: usize) -> Level {
        let mut self_loop = vec![0.0; c];
        let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); c];
        for v in 0..self.n() {
            let cv = comm[v];
            self_loop[cv] += self.self_loop[v];
            for &(w, wt) in &self.adj[v] {
                let cw = comm[w];
                if cv == cw {
                    // each internal edge is seen from both ends
                    self_loop[cv] += wt / 2.0;
                } else {
                    *links[cv].entry(cw).or_insert(0.0) += wt;
                }
            }
        }
        Level {
            adj: links.into_iter().map(|l| l.into_iter().collect()).collect(),
            self_loop,
        }
    }
}

/// Louvain: local moving in a seeded random order, then aggregation, until
/// a level moves nothing.
pub fn louvain(g: &ConfrontGraph, seed: u64) -> Result<CommunityPartition> {
    louvain_simple(&g.simple(), seed)
}

pub fn louvain_simple(g: &SimpleGraph, seed: u64) -> Result<CommunityPartition> {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut levels = Vec::new();
    if g.m() > 0 {
        let mut level = Level::from_simple(g);
        loop {
            let (comm, moved) = level.local_moving(&mut rng);
            if !moved {
                break;
            }
            let dense = contiguous(&comm);
            let c = dense.iter().copied().max().unwrap_or(0);
            let dense: Vec<usize> = dense.into_iter().map(|x| x - 1).collect();
            for m in membership.iter_mut() {
                *m = dense[*m];
            }
            levels.push(modularity_of(g, &membership)?);
            level = level.aggregate(&dense, c);
        }
    }
    let mut p = CommunityPartition::from_simple(g, &membership, "louvain", Some(seed))?;
    p.level_modularity = levels;
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityStats {
    pub community: usize,
    /// Statistics of the induced subgraph; coverage is relative to the whole
    /// graph's baseline.
    pub summary: GraphSummary,
    /// Share of the community's vertices that are properties.
    pub property_proportion: f64,
}

/// Statistics of each community's induced subgraph, computed in parallel and
/// returned by community id.
pub fn community_stats(g: &ConfrontGraph, p: &CommunityPartition) -> Result<Vec<CommunityStats>> {
    check_cover(g, p)?;
    let members = p.members();
    members
        .par_iter()
        .enumerate()
        .map(|(i, vs)| {
            let c = i + 1;
            let sub = g.induced_subgraph(|v| p.assignment[v] == c);
            let summary = summarize(&sub, g.property_baseline)?;
            let property_proportion = summary.property_count as f64 / vs.len() as f64;
            Ok(CommunityStats {
                community: c,
                summary,
                property_proportion,
            })
        })
        .collect()
}

fn check_cover(g: &ConfrontGraph, p: &CommunityPartition) -> Result<()> {
    if p.assignment.len() != g.vertex_count() {
        return Err(Error::UncoveredVertex {
            covered: p.assignment.len(),
            expected: g.vertex_count(),
        });
    }
    Ok(())
}

/// Gini coefficient of community sizes; 0 when all are equal.
pub fn size_gini(sizes: &[usize]) -> f64 {
    if sizes.is_empty() {
        return 0.0;
    }
    let mut s: Vec<f64> = sizes.iter().map(|&x| x as f64).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let total: f64 = s.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let weighted: f64 = s.iter().enumerate().map(|(i, x)| (i as f64 + 1.0) * x).sum();
    (2.0 * weighted) / (n * total) - (n + 1.0) / n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityNode {
    pub community: usize,
    pub size: usize,
    /// Undirected simple edges inside the community.
    pub internal_edges: usize,
    pub kinds: BTreeMap<String, usize>,
    /// Vertices per parish; unknown parishes under `""`.
    pub parishes: BTreeMap<String, usize>,
    pub inside_old_walls: usize,
    pub outside_old_walls: usize,
    pub walls_unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityLink {
    pub a: usize,
    pub b: usize,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityNetwork {
    pub nodes: Vec<CommunityNode>,
    pub links: Vec<CommunityLink>,
}

impl CommunityNetwork {
    pub fn total_link_weight(&self) -> usize {
        self.links.iter().map(|l| l.weight).sum()
    }

    pub fn total_internal_edges(&self) -> usize {
        self.nodes.iter().map(|n| n.internal_edges).sum()
    }
}

/// Quotient graph of the partition on the simple view, with composition
/// histograms per community.
pub fn community_network(g: &ConfrontGraph, p: &CommunityPartition) -> Result<CommunityNetwork> {
    check_cover(g, p)?;
    let mut nodes: Vec<CommunityNode> = (1..=p.community_count())
        .map(|c| CommunityNode {
            community: c,
            size: 0,
            internal_edges: 0,
            kinds: BTreeMap::new(),
            parishes: BTreeMap::new(),
            inside_old_walls: 0,
            outside_old_walls: 0,
            walls_unknown: 0,
        })
        .collect();
    for (v, vert) in g.vertices().iter().enumerate() {
        let node = &mut nodes[p.assignment[v] - 1];
        node.size += 1;
        *node.kinds.entry(vert.kind.to_string()).or_default() += 1;
        *node.parishes.entry(vert.parish.clone().unwrap_or_default()).or_default() += 1;
        match vert.inside_old_walls {
            Some(true) => node.inside_old_walls += 1,
            Some(false) => node.outside_old_walls += 1,
            None => node.walls_unknown += 1,
        }
    }
    let mut weights: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (a, b) in g.simple().edge_list() {
        let (ca, cb) = (p.assignment[a], p.assignment[b]);
        if ca == cb {
            nodes[ca - 1].internal_edges += 1;
        } else {
            *weights.entry((ca.min(cb), ca.max(cb))).or_default() += 1;
        }
    }
    Ok(CommunityNetwork {
        nodes,
        links: weights
            .into_iter()
            .map(|((a, b), weight)| CommunityLink { a, b, weight })
            .collect(),
    })
}
