mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;

use confront_core::community::{community_network, louvain_simple, modularity_of};
use confront_core::metrics::{all_pairs_graph_distance, harmonic_mean_distance, spearman_rho};
use confront_core::model::{Dimensionality, ObjectKind};
use confront_core::normalize::{normalize_for, RawRelation};
use confront_core::sweep::MaxRhoOnFront;
use confront_core::synth::{self, DatabaseParams};
use confront_core::{
    load_database, merge_equal_objects, pareto_front, select_best, write_database, Database, SimpleGraph, SweepPoint,
};

fn small_params(properties: usize, streets: usize) -> DatabaseParams {
    DatabaseParams {
        properties,
        streets,
        ..DatabaseParams::default()
    }
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..=3 * n)))
}

fn sorted_relations(db: &Database) -> Vec<String> {
    let mut out: Vec<String> = db.relations().iter().map(|r| format!("{r:?}")).collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn written_database_loads_back_identical(seed in any::<u64>(), props in 1usize..40, streets in 2usize..8) {
        let db = synth::random_database(seed, &small_params(props, streets));
        let dir = tempfile::tempdir().unwrap();
        let files = write_database(&db, dir.path()).unwrap();
        let back = load_database(&files.objects, &files.relations, files.segments.as_deref()).unwrap();
        prop_assert_eq!(back, db);
    }

    #[test]
    fn merge_matches_class_oracle(seed in any::<u64>(), egal in 0usize..12) {
        let params = DatabaseParams { properties: 30, egal_pairs: egal, ..DatabaseParams::default() };
        let db = synth::random_database(seed, &params);
        let classes = common::egal_classes(&db);
        let merged = merge_equal_objects(&db).unwrap();

        let expected: BTreeSet<&str> = classes.values().map(String::as_str).collect();
        let got: BTreeSet<&str> = merged.objects().map(|o| o.id.as_str()).collect();
        prop_assert_eq!(got, expected);
        for r in merged.relations() {
            prop_assert!(r.raw_type != RawRelation::Egal);
            prop_assert_eq!(&classes[&r.source_id], &r.source_id);
            prop_assert_eq!(&classes[&r.target_id], &r.target_id);
            prop_assert!(r.source_id != r.target_id);
        }
        // every non-Egal relation either survives or collapsed onto a kept one
        for r in db.relations().iter().filter(|r| r.raw_type != RawRelation::Egal) {
            let (s, t) = (&classes[&r.source_id], &classes[&r.target_id]);
            if s != t {
                prop_assert!(merged.relations().iter().any(|m| &m.source_id == s
                    && &m.target_id == t
                    && m.raw_type == r.raw_type
                    && m.origin == r.origin));
            }
        }
    }

    #[test]
    fn merge_is_idempotent_and_order_free(seed in any::<u64>(), shuffle in any::<u64>()) {
        let params = DatabaseParams { properties: 30, egal_pairs: 8, ..DatabaseParams::default() };
        let db = synth::random_database(seed, &params);
        let once = merge_equal_objects(&db).unwrap();
        prop_assert_eq!(&merge_equal_objects(&once).unwrap(), &once);

        let mut rng = synth::rng(shuffle);
        let mut objects: Vec<_> = db.objects().cloned().collect();
        let mut relations = db.relations().to_vec();
        objects.shuffle(&mut rng);
        relations.shuffle(&mut rng);
        let permuted = merge_equal_objects(&Database::new(objects, relations).unwrap()).unwrap();
        prop_assert_eq!(sorted_relations(&permuted), sorted_relations(&once));
        prop_assert_eq!(permuted.property_baseline(), once.property_baseline());
    }

    #[test]
    fn normalization_is_total(raw in prop::sample::select(RawRelation::ALL.to_vec()),
                              kind in prop::sample::select(ObjectKind::ALL.to_vec()),
                              dim in prop::sample::select(vec![Dimensionality::Punctual, Dimensionality::Linear, Dimensionality::Surface])) {
        let r = normalize_for(raw, kind, dim);
        if raw == RawRelation::Egal {
            prop_assert!(r.is_err());
        } else {
            prop_assert!(r.is_ok());
        }
    }

    #[test]
    fn distances_are_a_metric((n, edges) in graph_strategy(30)) {
        let d = all_pairs_graph_distance(&SimpleGraph::from_edges(n, edges.iter().copied()));
        for u in 0..n {
            prop_assert_eq!(d.get(u, u), 0);
            for v in 0..n {
                prop_assert_eq!(d.get(u, v), d.get(v, u));
                for w in 0..n {
                    prop_assert!(d.hops(u, w) <= d.hops(u, v) + d.hops(v, w));
                }
            }
        }
    }

    #[test]
    fn adding_an_edge_never_lengthens_distances((n, edges) in graph_strategy(25), a in 0usize..25, b in 0usize..25) {
        prop_assume!(n >= 2);
        let (a, b) = (a % n, b % n);
        let before = harmonic_mean_distance(&all_pairs_graph_distance(&SimpleGraph::from_edges(n, edges.iter().copied())));
        let mut more = edges.clone();
        more.push((a, b));
        let after = harmonic_mean_distance(&all_pairs_graph_distance(&SimpleGraph::from_edges(n, more)));
        prop_assert!(after.unwrap() <= before.unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(pairs in prop::collection::vec((prop::option::weighted(0.85, 1u32..12), 0.0f64..1000.0), 2..120)) {
        let hops: Vec<f64> = pairs.iter().map(|(h, _)| h.map_or(f64::INFINITY, f64::from)).collect();
        let space: Vec<f64> = pairs.iter().map(|(_, s)| *s).collect();
        let squared: Vec<f64> = hops.iter().map(|h| h * h).collect();
        let cubed: Vec<f64> = space.iter().map(|s| s.powi(3) + 7.0).collect();
        let base = spearman_rho(&hops, &space);
        let moved = spearman_rho(&squared, &cubed);
        match (base, moved) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn pareto_front_ignores_input_order(raw in prop::collection::vec((0usize..20, 0u8..10), 1..60), shuffle in any::<u64>()) {
        let points: Vec<SweepPoint> = raw.iter().enumerate()
            .map(|(k, &(c, r))| SweepPoint::bare(k, c, f64::from(r) / 10.0))
            .collect();
        let mut permuted = points.clone();
        permuted.shuffle(&mut synth::rng(shuffle));
        let key = |f: Vec<SweepPoint>| f.into_iter().map(|p| p.k).collect::<BTreeSet<_>>();
        let front = key(pareto_front(&points));
        prop_assert_eq!(&front, &key(pareto_front(&permuted)));
        let best = select_best(&points, &MaxRhoOnFront).unwrap();
        prop_assert!(front.contains(&best.k));
        prop_assert_eq!(select_best(&permuted, &MaxRhoOnFront).unwrap().k, best.k);
    }

    #[test]
    fn community_bookkeeping_adds_up((n, edges) in graph_strategy(40), seed in 0u64..4) {
        let coords = vec![None; n];
        let g = synth::graph_from_edges(&coords, &edges);
        let simple = g.simple();
        let p = louvain_simple(&simple, seed).unwrap();
        let net = community_network(&g, &p).unwrap();
        prop_assert_eq!(p.sizes().iter().sum::<usize>(), n);
        prop_assert_eq!(net.nodes.iter().map(|c| c.size).sum::<usize>(), n);
        prop_assert_eq!(net.total_internal_edges() + net.total_link_weight(), simple.m());
        let q = modularity_of(&simple, &p.assignment).unwrap();
        prop_assert!((q - p.modularity).abs() < 1e-12);
        let oracle = common::modularity_oracle(n, &edges, &p.assignment);
        prop_assert!((q - oracle).abs() < 1e-12, "{} vs {}", q, oracle);
    }
}
