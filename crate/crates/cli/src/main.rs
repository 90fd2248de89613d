//! `scimap`: batch pipeline over an embedded bibliographic corpus. Each
//! subcommand consumes files, writes files, and records a deterministic
//! manifest, so partial pipelines are resumable.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Environment variable providing the default output root.
const OUT_ENV: &str = "SCIMAP_OUT";

#[derive(Debug)]
pub enum StageError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3: a required upstream artifact is absent.
    MissingArtifact {
        path: PathBuf,
        producer: &'static str,
    },
    /// Exit code 4: input data failed validation.
    Data(scimap_core::Error),
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StageError::Config(msg) => write!(f, "configuration error: {msg}"),
            StageError::MissingArtifact { path, producer } => write!(
                f,
                "missing artifact {}: run the `{producer}` subcommand first (or point the config at existing data)",
                path.display()
            ),
            StageError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl StageError {
    fn exit_code(&self) -> u8 {
        match self {
            StageError::Config(_) => 2,
            StageError::MissingArtifact { .. } => 3,
            StageError::Data(e) => match e {
                scimap_core::Error::Config(_) => 2,
                _ => 4,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "scimap",
    version,
    about = "Knowledge-cartography pipeline: ingest, project, cluster, profile, conceptnet, citegeom, validate"
)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (falls back to the config's out_dir, then $SCIMAP_OUT, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override for this run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Config overrides of the form section.key=value; repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus, vectors, map, and keyword list.
    Synth,
    /// Load, filter, and AI-tag the corpus.
    Ingest,
    /// Import map coordinates or compute the fallback 2-D projection.
    Project,
    /// Build the density hierarchy, condensed tree, and cluster assignment.
    Cluster,
    /// Cluster rankings, shares, temporal series, snapshots, density grid.
    Profile,
    /// Cumulative concept networks and AI coreness series.
    Conceptnet,
    /// Citation radius-of-gyration metrics, matrices, and dynamics.
    Citegeom,
    /// kNN accuracy sweeps, confusion matrices, neighbor overlap.
    Validate,
    /// Run every stage after synth, in order.
    All,
}

fn run(cli: &Cli) -> Result<(), StageError> {
    if let Some(n) = cli.threads {
        // Ignore failure: the global pool may already exist.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let config = config::load_config(cli.config.as_deref(), &cli.overrides)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)
        .map_err(|e| StageError::Config(format!("cannot create {}: {e}", out.display())))?;
    let seed = cli.seed.unwrap_or(config.seed);

    let ctx = stages::StageCtx {
        config: &config,
        out: &out,
        seed,
    };
    match cli.command {
        Command::Synth => stages::run_synth(&ctx),
        Command::Ingest => stages::run_ingest(&ctx),
        Command::Project => stages::run_project(&ctx),
        Command::Cluster => stages::run_cluster(&ctx),
        Command::Profile => stages::run_profile(&ctx),
        Command::Conceptnet => stages::run_conceptnet(&ctx),
        Command::Citegeom => stages::run_citegeom(&ctx),
        Command::Validate => stages::run_validate(&ctx),
        Command::All => stages::run_all(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scimap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
