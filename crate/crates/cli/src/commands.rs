use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;

use confront_core::community::{community_network, community_stats, louvain, size_gini};
use confront_core::export::{community_network_gexf, read_graph, serialize_graph, Format};
use confront_core::extract::build_full_graph;
use confront_core::metrics::{distance_profile, GraphSummary};
use confront_core::sweep::{default_k_range, MaxRhoOnFront};
use confront_core::{
    load_database, pareto_front, select_best, summarize, sweep_k, validate_database, ConfrontGraph,
    Database, Error, ExtractionMethod, Scope,
};

use crate::manifest::RunSpec;
use crate::output::{OutputDir, Table};
use crate::{usage, CommunitiesArgs, ExtractArgs, Failure, GenerateArgs, GraphFormat, InputArgs, MethodArgs, StatsArgs, SweepArgs};

const STATS_COLUMNS: [&str; 10] = [
    "method",
    "n",
    "m",
    "delta",
    "properties",
    "coverage",
    "components",
    "d_max",
    "d_harm",
    "rho_d",
];

fn load(input: &InputArgs) -> Result<Database, Failure> {
    let db = load_database(&input.objects, &input.relations, input.segments.as_deref())?;
    let warnings = validate_database(&db);
    if !warnings.is_empty() {
        eprintln!("warning: {} data warnings; run `validate` to list them", warnings.len());
    }
    Ok(db)
}

fn record_inputs(spec: &mut RunSpec, input: &InputArgs) -> Result<(), Failure> {
    spec.input("objects", &input.objects)?;
    spec.input("relations", &input.relations)?;
    if let Some(s) = &input.segments {
        spec.input("segments", s)?;
    }
    Ok(())
}

fn parse_method(code: &str, k: Option<usize>, threshold: usize) -> Result<ExtractionMethod, Failure> {
    let method: ExtractionMethod = code.parse().map_err(|e: Error| usage(e.to_string()))?;
    let method = method.with_threshold(threshold);
    match (method.scope, k) {
        (Scope::TopK, None) => Err(usage(format!("method {code} needs --k"))),
        (_, Some(k)) => Ok(method.with_k(k)),
        (_, None) => Ok(method),
    }
}

fn resolve_methods(m: &MethodArgs) -> Result<Vec<ExtractionMethod>, Failure> {
    if m.all {
        let k = m.k.ok_or_else(|| usage("--all includes top-k methods and needs --k"))?;
        return Ok(ExtractionMethod::all_methods(k)
            .into_iter()
            .map(|x| x.with_threshold(m.threshold))
            .collect());
    }
    let code = m.method.as_deref().ok_or_else(|| usage("give --method CODE or --all"))?;
    Ok(vec![parse_method(code, m.k, m.threshold)?])
}

fn record_methods(spec: &mut RunSpec, methods: &[ExtractionMethod], m: &MethodArgs) {
    spec.methods = methods.iter().map(ExtractionMethod::code).collect();
    if let Some(k) = m.k {
        spec.param("k", k);
    }
    spec.param("threshold", m.threshold);
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_fields(label: &str, s: &GraphSummary) -> Vec<String> {
    if s.n == 0 {
        eprintln!("warning: {label} is empty");
        let mut row = vec![label.to_string()];
        row.extend(std::iter::repeat_n("0".to_string(), STATS_COLUMNS.len() - 1));
        return row;
    }
    vec![
        label.to_string(),
        s.n.to_string(),
        s.m.to_string(),
        s.delta.to_string(),
        s.property_count.to_string(),
        s.property_coverage.to_string(),
        s.components.to_string(),
        opt(s.d_max),
        opt(s.d_harm),
        opt(s.rho_d),
    ]
}

fn stats_table(rows: &[(String, GraphSummary)], hash: &str) -> Result<Vec<u8>, Failure> {
    let mut t = Table::new(&STATS_COLUMNS, hash)?;
    for (label, s) in rows {
        t.row(summary_fields(label, s))?;
    }
    Ok(t.into_bytes()?)
}

fn profile_table(g: &ConfrontGraph, label: &str, hash: &str) -> Result<Vec<u8>, Failure> {
    let mut t = Table::new(&["hops", "pairs", "mean_m", "std_m"], hash)?;
    match distance_profile(g) {
        Ok(p) => {
            for b in &p.buckets {
                let hops = b.hops.map_or("inf".to_string(), |h| h.to_string());
                t.row([hops, b.pairs.to_string(), b.mean_m.to_string(), b.std_m.to_string()])?;
            }
        }
        Err(Error::InsufficientCoordinates) => eprintln!("warning: {label} has fewer than two located vertices"),
        Err(e) => return Err(e.into()),
    }
    Ok(t.into_bytes()?)
}

pub fn extract(a: &ExtractArgs) -> Result<(), Failure> {
    let methods = resolve_methods(&a.method)?;
    let format = match a.format {
        GraphFormat::Graphml => Format::GraphMl,
        GraphFormat::Gexf => Format::Gexf,
    };
    let mut spec = RunSpec::new("extract");
    record_inputs(&mut spec, &a.input)?;
    record_methods(&mut spec, &methods, &a.method);
    spec.param("format", format.extension());
    let db = load(&a.input)?;

    let out = OutputDir::create(&a.out, spec)?;
    let hash = out.manifest_hash().to_string();
    let mut rows: Vec<(String, GraphSummary)> = methods
        .par_iter()
        .map(|m| -> anyhow::Result<(String, GraphSummary)> {
            let code = m.code();
            let g = confront_core::extract(&db, m).with_context(|| format!("method {code}"))?;
            let bytes = serialize_graph(&g, format, Some(&hash))?;
            out.write(&format!("{code}.{}", format.extension()), &bytes)?;
            Ok((code, summarize(&g, db.property_baseline())?))
        })
        .collect::<anyhow::Result<_>>()?;

    if a.method.all {
        let full = build_full_graph(&db)?;
        rows.insert(0, ("Full".to_string(), summarize(&full, db.property_baseline())?));
        out.write("stats.csv", &stats_table(&rows, &hash)?)?;
    } else {
        let (code, s) = &rows[0];
        println!(
            "{code}: n={} m={} properties={} components={}",
            s.n, s.m, s.property_count, s.components
        );
    }
    let manifest = out.finish()?;
    eprintln!("wrote {} graph(s) and {}", methods.len(), manifest.display());
    Ok(())
}

fn graph_label(g: &ConfrontGraph, path: &Path) -> String {
    g.method
        .as_ref()
        .map(ExtractionMethod::code)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "graph".to_string())
}

pub fn stats(a: &StatsArgs) -> Result<(), Failure> {
    let mut spec = RunSpec::new("stats");
    spec.param("profile", a.profile);
    // (label, graph, coverage baseline)
    let mut graphs: Vec<(String, ConfrontGraph, usize)> = Vec::new();
    match (&a.objects, &a.relations) {
        (Some(objects), Some(relations)) => {
            if !a.graphs.is_empty() {
                return Err(usage("give graph files or a database, not both"));
            }
            let input = InputArgs {
                objects: objects.clone(),
                relations: relations.clone(),
                segments: a.segments.clone(),
            };
            let methods = resolve_methods(&a.method)?;
            record_inputs(&mut spec, &input)?;
            record_methods(&mut spec, &methods, &a.method);
            let db = load(&input)?;
            let baseline = db.property_baseline();
            if a.method.all {
                graphs.push(("Full".to_string(), build_full_graph(&db)?, baseline));
            }
            let extracted: Vec<(String, ConfrontGraph, usize)> = methods
                .par_iter()
                .map(|m| -> anyhow::Result<_> {
                    let g = confront_core::extract(&db, m).with_context(|| format!("method {}", m.code()))?;
                    Ok((m.code(), g, baseline))
                })
                .collect::<anyhow::Result<_>>()?;
            graphs.extend(extracted);
        }
        _ => {
            if a.graphs.is_empty() {
                return Err(usage("give graph files or --objects/--relations with --method or --all"));
            }
            for path in &a.graphs {
                spec.input("graph", path)?;
                let g = read_graph(path).with_context(|| format!("cannot read graph {}", path.display()))?;
                let baseline = g.property_baseline;
                graphs.push((graph_label(&g, path), g, baseline));
            }
        }
    }

    let out = OutputDir::create(&a.out, spec)?;
    let hash = out.manifest_hash().to_string();
    let rows: Vec<(String, GraphSummary)> = graphs
        .par_iter()
        .map(|(label, g, baseline)| Ok((label.clone(), summarize(g, *baseline)?)))
        .collect::<Result<_, Error>>()?;
    out.write("stats.csv", &stats_table(&rows, &hash)?)?;
    if a.profile {
        for (label, g, _) in &graphs {
            out.write(&format!("profile_{label}.csv"), &profile_table(g, label, &hash)?)?;
        }
    }
    out.finish()?;
    Ok(())
}

fn parse_range(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || usage(format!("--k-range expects A..B with A <= B, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let explicit = a.k_range.as_deref().map(parse_range).transpose()?;
    let base = ExtractionMethod::parse_base(&a.base, Scope::TopK)
        .map_err(|e| usage(e.to_string()))?
        .with_threshold(a.threshold);
    let mut spec = RunSpec::new("sweep");
    record_inputs(&mut spec, &a.input)?;
    spec.methods = vec![base.code()];
    spec.param("threshold", a.threshold);
    let db = load(&a.input)?;
    let ks = explicit.unwrap_or_else(|| default_k_range(&db));
    spec.param("k_range", format!("{}..{}", ks[0], ks[ks.len() - 1]));

    let points = sweep_k(&db, &base, &ks)?;
    let front: Vec<usize> = pareto_front(&points).iter().map(|p| p.k).collect();
    let best = select_best(&points, &MaxRhoOnFront).expect("non-empty sweep");

    let out = OutputDir::create(&a.out, spec)?;
    let mut t = Table::new(
        &["k", "n", "m", "properties", "coverage", "rho_d", "pareto", "selected"],
        out.manifest_hash(),
    )?;
    for p in &points {
        t.row([
            p.k.to_string(),
            p.summary.n.to_string(),
            p.summary.m.to_string(),
            p.coverage.to_string(),
            p.summary.property_coverage.to_string(),
            opt(p.rho),
            front.contains(&p.k).to_string(),
            (p.k == best.k).to_string(),
        ])?;
    }
    out.write(&format!("sweep_{}.csv", a.base), &t.into_bytes()?)?;
    out.finish()?;
    println!(
        "selected k={} coverage={} rho_d={}",
        best.k,
        best.coverage,
        best.rho.map_or("undefined".to_string(), |r| format!("{r:.4}"))
    );
    Ok(())
}

pub fn communities(a: &CommunitiesArgs) -> Result<(), Failure> {
    let mut spec = RunSpec::new("communities");
    spec.param("seed", a.seed);
    let g = match (&a.graph, &a.objects, &a.relations) {
        (Some(path), _, _) => {
            spec.input("graph", path)?;
            read_graph(path).with_context(|| format!("cannot read graph {}", path.display()))?
        }
        (None, Some(objects), Some(relations)) => {
            let code = a.method.as_deref().ok_or_else(|| usage("a database input needs --method"))?;
            let method = parse_method(code, a.k, a.threshold)?;
            let input = InputArgs {
                objects: objects.clone(),
                relations: relations.clone(),
                segments: a.segments.clone(),
            };
            record_inputs(&mut spec, &input)?;
            spec.methods = vec![method.code()];
            if let Some(k) = a.k {
                spec.param("k", k);
            }
            spec.param("threshold", a.threshold);
            let db = load(&input)?;
            confront_core::extract(&db, &method)?
        }
        _ => return Err(usage("give --graph FILE or --objects/--relations with --method")),
    };
    if g.vertex_count() == 0 {
        return Err(Failure::Data(anyhow::anyhow!("graph is empty")));
    }

    let p = louvain(&g, a.seed)?;
    let stats = community_stats(&g, &p)?;
    let net = community_network(&g, &p)?;

    let out = OutputDir::create(&a.out, spec)?;
    let hash = out.manifest_hash().to_string();

    let mut t = Table::new(&["vertex", "community"], &hash)?;
    for (v, c) in g.vertices().iter().zip(&p.assignment) {
        t.row([v.id.clone(), c.to_string()])?;
    }
    out.write("partition.csv", &t.into_bytes()?)?;

    let mut columns = STATS_COLUMNS.to_vec();
    columns[0] = "community";
    columns.push("property_proportion");
    let mut t = Table::new(&columns, &hash)?;
    for s in &stats {
        let mut row = summary_fields(&s.community.to_string(), &s.summary);
        row.push(s.property_proportion.to_string());
        t.row(row)?;
    }
    out.write("communities.csv", &t.into_bytes()?)?;

    let mut t = Table::new(&["communities", "modularity", "seed", "size_gini"], &hash)?;
    t.row([
        p.community_count().to_string(),
        p.modularity.to_string(),
        a.seed.to_string(),
        size_gini(&p.sizes()).to_string(),
    ])?;
    out.write("modularity.csv", &t.into_bytes()?)?;

    out.write("quotient.gexf", community_network_gexf(&net, Some(&hash)).as_bytes())?;

    let mut kinds = Table::new(&["community", "kind", "count"], &hash)?;
    let mut parishes = Table::new(&["community", "parish", "count"], &hash)?;
    let mut walls = Table::new(&["community", "inside", "outside", "unknown"], &hash)?;
    for node in &net.nodes {
        let c = node.community.to_string();
        for (kind, n) in &node.kinds {
            kinds.row([c.clone(), kind.clone(), n.to_string()])?;
        }
        for (parish, n) in &node.parishes {
            parishes.row([c.clone(), parish.clone(), n.to_string()])?;
        }
        walls.row([
            c,
            node.inside_old_walls.to_string(),
            node.outside_old_walls.to_string(),
            node.walls_unknown.to_string(),
        ])?;
    }
    out.write("composition_kinds.csv", &kinds.into_bytes()?)?;
    out.write("composition_parishes.csv", &parishes.into_bytes()?)?;
    out.write("composition_walls.csv", &walls.into_bytes()?)?;
    out.finish()?;
    println!("{} communities, Q = {:.4}", p.community_count(), p.modularity);
    Ok(())
}

pub fn validate(a: &InputArgs) -> Result<(), Failure> {
    let db = load_database(&a.objects, &a.relations, a.segments.as_deref())?;
    let warnings = validate_database(&db);
    for w in &warnings {
        println!("warning: {w}");
    }
    println!(
        "{} objects, {} relations, {} properties in relations, {} warnings",
        db.object_count(),
        db.relations().len(),
        db.property_baseline(),
        warnings.len()
    );
    Ok(())
}

pub fn generate(a: &GenerateArgs) -> Result<(), Failure> {
    let params = confront_core::synth::DatabaseParams {
        properties: a.properties,
        streets: a.streets,
        ..Default::default()
    };
    let db = confront_core::synth::random_database(a.seed, &params);
    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let files = confront_core::write_database(&db, &a.out)?;
    println!("{}", files.objects.display());
    println!("{}", files.relations.display());
    if let Some(s) = files.segments {
        println!("{}", s.display());
    }
    Ok(())
}
