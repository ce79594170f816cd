//! Sweeps over the number `k` of longest streets handled by a top-k method,
//! and selection of `k` on the coverage / distance-correlation Pareto front.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{extract, ExtractionMethod, Scope};
use crate::metrics::{summarize, GraphSummary};
use crate::model::Database;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    /// Property vertices kept.
    pub coverage: usize,
    pub rho: Option<f64>,
    pub summary: GraphSummary,
}

impl SweepPoint {
    /// Rho used for comparisons; an undefined correlation ranks lowest.
    pub fn rho_or_min(&self) -> f64 {
        self.rho.unwrap_or(f64::NEG_INFINITY)
    }

    /// Bare point for ranking experiments.
    pub fn bare(k: usize, coverage: usize, rho: f64) -> Self {
        SweepPoint {
            k,
            coverage,
            rho: Some(rho),
            summary: GraphSummary {
                n: 0,
                m: 0,
                typed_edges: 0,
                delta: 0.0,
                property_count: coverage,
                property_coverage: 0.0,
                components: 0,
                d_max: None,
                d_harm: None,
                rho_d: Some(rho),
            },
        }
    }
}

/// Default sweep: `0..=ceil(10 % of the street count)`.
pub fn default_k_range(db: &Database) -> Vec<usize> {
    let upper = db.street_count().div_ceil(10);
    (0..=upper).collect()
}

/// One extraction and summary per `k`, evaluated in parallel, returned in
/// input order.
pub fn sweep_k(db: &Database, base: &ExtractionMethod, k_values: &[usize]) -> Result<Vec<SweepPoint>> {
    if base.scope != Scope::TopK {
        return Err(Error::InvalidMethod(format!("{} is not a top-k method", base.code())));
    }
    let mut seen = HashSet::new();
    for &k in k_values {
        if !seen.insert(k) {
            return Err(Error::DuplicateK(k));
        }
    }
    k_values
        .par_iter()
        .map(|&k| {
            let g = extract(db, &base.clone().with_k(k))?;
            let summary = summarize(&g, db.property_baseline())?;
            Ok(SweepPoint {
                k,
                coverage: summary.property_count,
                rho: summary.rho_d,
                summary,
            })
        })
        .collect()
}

/// Points not dominated on (coverage, rho), by descending coverage then
/// descending rho then ascending k. Points tied on both objectives are all
/// kept.
pub fn pareto_front(points: &[SweepPoint]) -> Vec<SweepPoint> {
    front_indices(points).into_iter().map(|i| points[i].clone()).collect()
}

fn front_indices(points: &[SweepPoint]) -> Vec<usize> {
    let mut sorted: Vec<usize> = (0..points.len()).collect();
    sorted.sort_by(|&a, &b| {
        let (a, b) = (&points[a], &points[b]);
        b.coverage
            .cmp(&a.coverage)
            .then(b.rho_or_min().total_cmp(&a.rho_or_min()))
            .then(a.k.cmp(&b.k))
    });
    // Scanning by descending coverage, a point survives iff its rho is at
    // least the best rho seen at strictly higher coverage, and it equals the
    // best rho of its own coverage group.
    let mut front = Vec::new();
    let mut best_above: Option<f64> = None;
    let mut i = 0;
    while i < sorted.len() {
        let cov = points[sorted[i]].coverage;
        let group_best = points[sorted[i]].rho_or_min();
        let mut j = i;
        while j < sorted.len() && points[sorted[j]].coverage == cov {
            let r = points[sorted[j]].rho_or_min();
            if r == group_best && best_above.is_none_or(|b| r > b) {
                front.push(sorted[j]);
            }
            j += 1;
        }
        best_above = Some(best_above.map_or(group_best, |b| b.max(group_best)));
        i = j;
    }
    front
}

/// Chooses one point among candidates.
pub trait SelectionPolicy {
    fn select<'a>(&self, points: &'a [SweepPoint]) -> Option<&'a SweepPoint>;
}

/// Highest rho on the Pareto front, smallest `k` on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct MaxRhoOnFront;

impl SelectionPolicy for MaxRhoOnFront {
    fn select<'a>(&self, points: &'a [SweepPoint]) -> Option<&'a SweepPoint> {
        front_indices(points)
            .into_iter()
            .map(|i| &points[i])
            .max_by(|a, b| a.rho_or_min().total_cmp(&b.rho_or_min()).then(b.k.cmp(&a.k)))
    }
}

pub fn select_best<'a>(points: &'a [SweepPoint], policy: &dyn SelectionPolicy) -> Option<&'a SweepPoint> {
    policy.select(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(points: &[SweepPoint]) -> Vec<usize> {
        points.iter().map(|p| p.k).collect()
    }

    #[test]
    fn small_front() {
        let pts = [
            SweepPoint::bare(0, 10, 0.5),
            SweepPoint::bare(1, 8, 0.7),
            SweepPoint::bare(2, 9, 0.4),
        ];
        assert_eq!(ks(&pareto_front(&pts)), [0, 1]);
        assert_eq!(select_best(&pts, &MaxRhoOnFront).unwrap().k, 1);
        assert_eq!(ks(&pareto_front(&pts[..1])), [0]);
    }

    #[test]
    fn ties_are_kept_and_smallest_k_wins() {
        let pts: Vec<SweepPoint> = (0..4).rev().map(|k| SweepPoint::bare(k, 5, 0.3)).collect();
        assert_eq!(pareto_front(&pts).len(), 4);
        assert_eq!(select_best(&pts, &MaxRhoOnFront).unwrap().k, 0);
    }

    #[test]
    fn flat_coverage_reduces_to_max_rho() {
        let pts = [
            SweepPoint::bare(0, 7, 0.71),
            SweepPoint::bare(1, 7, 0.78),
            SweepPoint::bare(2, 7, 0.80),
            SweepPoint::bare(3, 7, 0.79),
        ];
        assert_eq!(ks(&pareto_front(&pts)), [2]);
    }
}
