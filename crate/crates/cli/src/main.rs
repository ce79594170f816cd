mod commands;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use confront_core::extract::DEFAULT_COMPONENT_THRESHOLD;
use confront_core::community::DEFAULT_SEED;

pub const THREADS_ENV: &str = "CONFRONT_THREADS";

/// Extract and analyse confront networks from historical spatial databases.
#[derive(Debug, Parser)]
#[command(name = "confront-net", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract graphs with one method or all sixteen.
    Extract(ExtractArgs),
    /// Topological statistics, one CSV row per graph.
    Stats(StatsArgs),
    /// Sweep the number of longest streets handled by a top-k method and
    /// select k on the coverage / correlation Pareto front.
    Sweep(SweepArgs),
    /// Louvain communities with per-community statistics and the community
    /// network.
    Communities(CommunitiesArgs),
    /// Load a database and report data warnings.
    Validate(InputArgs),
    /// Print the embedded relation normalization table as CSV.
    DumpNormalization,
    /// Write a seeded synthetic database (objects, relations, segments).
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Objects CSV (or JSON array).
    #[arg(long)]
    pub objects: PathBuf,
    /// Relations CSV (or JSON array).
    #[arg(long)]
    pub relations: PathBuf,
    /// Street segments CSV.
    #[arg(long)]
    pub segments: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MethodArgs {
    /// Method code such as `RHW_all` or `EFS_k`.
    #[arg(long, conflicts_with = "all")]
    pub method: Option<String>,
    /// Run all sixteen methods.
    #[arg(long)]
    pub all: bool,
    /// Number of longest streets treated by `_k` methods.
    #[arg(long)]
    pub k: Option<usize>,
    /// Smallest component kept, in vertices.
    #[arg(long, default_value_t = DEFAULT_COMPONENT_THRESHOLD)]
    pub threshold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Graphml,
    Gexf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GraphFormat::Graphml)]
    pub format: GraphFormat,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Graph files (GraphML, GEXF or binary cache). Alternatively give a
    /// database and methods to extract inline.
    pub graphs: Vec<PathBuf>,
    #[arg(long, requires = "relations")]
    pub objects: Option<PathBuf>,
    #[arg(long, requires = "objects")]
    pub relations: Option<PathBuf>,
    #[arg(long)]
    pub segments: Option<PathBuf>,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Also write one distance-profile CSV per graph.
    #[arg(long)]
    pub profile: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Base method without scope.
    #[arg(long, value_parser = ["RFW", "EFW", "RFS", "EFS"])]
    pub base: String,
    /// Inclusive range `A..B`; defaults to 0 up to a tenth of the streets.
    #[arg(long)]
    pub k_range: Option<String>,
    /// Smallest component kept, in vertices.
    #[arg(long, default_value_t = DEFAULT_COMPONENT_THRESHOLD)]
    pub threshold: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CommunitiesArgs {
    /// Graph file; alternatively give a database and one method.
    #[arg(long, conflicts_with_all = ["objects", "relations", "segments"])]
    pub graph: Option<PathBuf>,
    #[arg(long, requires = "relations")]
    pub objects: Option<PathBuf>,
    #[arg(long, requires = "objects")]
    pub relations: Option<PathBuf>,
    #[arg(long)]
    pub segments: Option<PathBuf>,
    /// Method code such as `EFS_k`.
    #[arg(long)]
    pub method: Option<String>,
    /// Number of longest streets treated by `_k` methods.
    #[arg(long)]
    pub k: Option<usize>,
    /// Smallest component kept, in vertices.
    #[arg(long, default_value_t = DEFAULT_COMPONENT_THRESHOLD)]
    pub threshold: usize,
    /// Seed of the Louvain visiting order.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 400)]
    pub properties: usize,
    #[arg(long, default_value_t = 30)]
    pub streets: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Why a command stopped: bad invocation (exit 1) or bad data (exit 2).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<confront_core::Error> for Failure {
    fn from(e: confront_core::Error) -> Self {
        Failure::Data(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Communities(a) => commands::communities(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::DumpNormalization => {
            print!("{}", confront_core::normalize::NORMALIZATION_TABLE_CSV);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
