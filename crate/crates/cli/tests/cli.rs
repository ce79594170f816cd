use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confront_core::export::to_graphml;
use confront_core::synth::{self, DatabaseParams};
use confront_core::write_database;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_confront-net"));
    c.env_remove("CONFRONT_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: tempfile::TempDir,
    objects: PathBuf,
    relations: PathBuf,
    segments: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let params = DatabaseParams {
            properties: 150,
            streets: 12,
            ..DatabaseParams::default()
        };
        let db = synth::random_database(11, &params);
        let files = write_database(&db, dir.path()).unwrap();
        Fixture {
            objects: files.objects,
            relations: files.relations,
            segments: files.segments.unwrap(),
            dir,
        }
    }

    fn db_args(&self) -> Vec<String> {
        vec![
            "--objects".into(),
            self.objects.display().to_string(),
            "--relations".into(),
            self.relations.display().to_string(),
            "--segments".into(),
            self.segments.display().to_string(),
        ]
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, command: &str, extra: &[&str]) -> Output {
        let mut args: Vec<String> = vec![command.into()];
        args.extend(self.db_args());
        args.extend(extra.iter().map(|s| s.to_string()));
        bin().args(&args).output().unwrap()
    }
}

fn manifest_hash(dir: &Path) -> String {
    let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["manifest_hash"].as_str().unwrap().to_string()
}

#[test]
fn help_exits_zero_and_lists_flags() {
    let cases: [(&str, &[&str]); 5] = [
        ("extract", &["--objects", "--relations", "--segments", "--method", "--all", "--k", "--threshold", "--out", "--format"]),
        ("stats", &["--profile", "--out", "--method", "--all"]),
        ("sweep", &["--base", "--k-range", "--threshold", "--out"]),
        ("communities", &["--graph", "--seed", "--method", "--out"]),
        ("validate", &["--objects", "--relations"]),
    ];
    for (sub, flags) in cases {
        let o = run(&[sub, "--help"]);
        assert!(o.status.success(), "{sub} --help");
        let text = stdout(&o);
        for f in flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
    }
    assert!(run(&["--help"]).status.success());
}

#[test]
fn usage_errors_exit_one() {
    let fx = Fixture::new();
    let out = fx.out("x");
    let o = fx.run("extract", &["--method", "EFS_k", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--k"), "{}", stderr(&o));

    let o = fx.run("extract", &["--method", "EHS_k", "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = fx.run("extract", &["--all", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["extract", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));

    let o = fx.run("sweep", &["--base", "EFS", "--k-range", "3..1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = fx.run("sweep", &["--base", "EFS", "--k-range", "two", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = bin()
        .env("CONFRONT_THREADS", "zero")
        .args(["dump-normalization"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_and_name_the_record() {
    let fx = Fixture::new();
    let broken = fx.out("broken.csv");
    let mut text = fs::read_to_string(&fx.relations).unwrap();
    text.push_str("RX1,P0000,NOWHERE,Iuxta,primary,\n");
    fs::write(&broken, text).unwrap();
    let out = fx.out("x");
    let o = run(&[
        "extract",
        "--objects",
        fx.objects.to_str().unwrap(),
        "--relations",
        broken.to_str().unwrap(),
        "--segments",
        fx.segments.to_str().unwrap(),
        "--method",
        "RHW_all",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NOWHERE"), "{}", stderr(&o));

    let o = run(&["stats", fx.out("missing.graphml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extract_all_writes_sixteen_graphs_and_stats() {
    let fx = Fixture::new();
    let out = fx.out("all");
    let o = fx.run("extract", &["--all", "--k", "2", "--threshold", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let hash = manifest_hash(&out);
    let graphs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "graphml"))
        .collect();
    assert_eq!(graphs.len(), 16);
    for g in &graphs {
        assert!(fs::read_to_string(g.path()).unwrap().contains(&hash));
    }
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    let lines: Vec<&str> = stats.lines().collect();
    assert_eq!(lines.len(), 18);
    assert!(lines[0].starts_with("method,n,m,delta,properties,coverage,components,d_max,d_harm,rho_d"));
    assert!(lines[1].starts_with("Full,"));
    assert!(lines.iter().skip(1).all(|l| l.ends_with(&hash)));
}

#[test]
fn reruns_are_byte_identical() {
    let fx = Fixture::new();
    let (a, b) = (fx.out("a"), fx.out("b"));
    for dir in [&a, &b] {
        let o = fx.run("extract", &["--method", "EFS_k", "--k", "2", "--threshold", "5", "--format", "gexf", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(a.join("EFS_k.gexf")).unwrap(), fs::read(b.join("EFS_k.gexf")).unwrap());
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        let m = v.as_object_mut().unwrap();
        m.remove("started_at").unwrap();
        m.remove("finished_at").unwrap();
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn sweep_single_point_selects_it() {
    let fx = Fixture::new();
    let out = fx.out("sweep");
    let o = fx.run("sweep", &["--base", "RFW", "--k-range", "0..0", "--threshold", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("selected k=0 "), "{}", stdout(&o));
    let csv = fs::read_to_string(out.join("sweep_RFW.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

fn two_triangles(dir: &Path) -> PathBuf {
    let coords = vec![None; 6];
    let g = synth::graph_from_edges(&coords, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
    let path = dir.join("triangles.graphml");
    fs::write(&path, to_graphml(&g, None)).unwrap();
    path
}

#[test]
fn communities_on_two_triangles() {
    let dir = tempfile::tempdir().unwrap();
    let graph = two_triangles(dir.path());
    let out = dir.path().join("com");
    let o = run(&["communities", "--graph", graph.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("2 communities, Q = 0.3571"), "{}", stdout(&o));
    for f in [
        "partition.csv",
        "communities.csv",
        "modularity.csv",
        "quotient.gexf",
        "composition_kinds.csv",
        "composition_parishes.csv",
        "composition_walls.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let partition = fs::read_to_string(out.join("partition.csv")).unwrap();
    let labels: Vec<&str> = partition.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels, ["1", "1", "1", "2", "2", "2"]);
}

#[test]
fn communities_are_reproducible_per_seed() {
    let fx = Fixture::new();
    for seed in ["0", "1"] {
        let (a, b) = (fx.out(&format!("s{seed}a")), fx.out(&format!("s{seed}b")));
        for dir in [&a, &b] {
            let o = fx.run(
                "communities",
                &["--method", "EFW_all", "--threshold", "5", "--seed", seed, "--out", dir.to_str().unwrap()],
            );
            assert!(o.status.success(), "{}", stderr(&o));
        }
        for f in ["partition.csv", "communities.csv", "quotient.gexf"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "seed {seed} {f}");
        }
    }
}

#[test]
fn empty_graph_gives_zero_row_and_community_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.graphml");
    fs::write(&empty, to_graphml(&synth::graph_from_edges(&[], &[]), None)).unwrap();
    let out = dir.path().join("st");
    let o = run(&["stats", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert!(stats.lines().nth(1).unwrap().starts_with("empty,0,0,0,0,0,0,0,0,0,"));

    let o = run(&["communities", "--graph", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stats_from_database_with_profiles() {
    let fx = Fixture::new();
    let out = fx.out("st");
    let o = fx.run("stats", &["--method", "RFS_streets", "--threshold", "5", "--profile", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("stats.csv")).unwrap().lines().count(), 2);
    let profile = fs::read_to_string(out.join("profile_RFS_streets.csv")).unwrap();
    assert!(profile.starts_with("hops,pairs,mean_m,std_m,manifest"));
}

#[test]
fn dump_normalization_prints_the_table() {
    let o = run(&["dump-normalization"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 43);
}

#[test]
fn thread_cap_is_honoured() {
    let fx = Fixture::new();
    let out = fx.out("t");
    let mut args = vec!["extract".to_string()];
    args.extend(fx.db_args());
    args.extend(["--method", "RHW_all", "--out", out.to_str().unwrap()].map(String::from));
    let o = bin().env("CONFRONT_THREADS", "1").args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}
