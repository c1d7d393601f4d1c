use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use techscape::analyze::DistanceSpace;
use techscape::config::PipelineConfig;
use techscape::corpus::DirectionPolicy;
use techscape::pipeline::{Pipeline, Stage};
use techscape::synth::{write_fixture, FixtureSpec};
use techscape::{Error, Result};

/// Technology embedding space and fitness landscape from patent data.
#[derive(Parser, Debug)]
#[command(name = "techscape", version)]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single-worker training in a fixed order.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    patents: Option<PathBuf>,
    #[arg(long, global = true)]
    citations: Option<PathBuf>,
    #[arg(long, global = true)]
    domains: Option<PathBuf>,
    /// Which citation edges define a domain's neighborhood.
    #[arg(long, global = true, value_enum)]
    direction: Option<Direction>,
    /// Space for distances to the peak.
    #[arg(long, global = true, value_enum)]
    space: Option<Space>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Direction {
    Undirected,
    Outgoing,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Space {
    #[value(name = "32d")]
    Embedding,
    #[value(name = "2d")]
    Plane,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate inputs; tally domain citations.
    Ingest,
    /// Train document vectors and average them into domain features.
    Textembed,
    /// Train GraphSAGE and write 32-dim domain embeddings.
    Graphembed,
    /// Lay the embeddings out in 2D with t-SNE.
    Project,
    /// Fit the rate surface, contours and peak.
    Landscape,
    /// Distance deciles, NBER shift matrix and peak topics.
    Analyze,
    /// Write the landscape bundle.
    Export,
    /// Run one stage by name, or `all` for every stage in order.
    Run { stage: String },
    /// Write a synthetic corpus (patents.jsonl, citations.csv, domains.csv).
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n_patents: usize,
        #[arg(long, default_value_t = 50)]
        n_domains: usize,
        #[arg(long, default_value_t = 7)]
        fixture_seed: u64,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn build_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if cli.deterministic {
        cfg.set_deterministic(true);
    }
    let paths = &mut cfg.paths;
    for (arg, slot) in [
        (&cli.out_dir, &mut paths.out_dir),
        (&cli.patents, &mut paths.patents),
        (&cli.citations, &mut paths.citations),
        (&cli.domains, &mut paths.domains),
    ] {
        if let Some(p) = arg {
            *slot = p.clone();
        }
    }
    if let Some(d) = cli.direction {
        cfg.graph.direction = match d {
            Direction::Undirected => DirectionPolicy::Undirected,
            Direction::Outgoing => DirectionPolicy::Outgoing,
        };
    }
    if let Some(s) = cli.space {
        cfg.analysis.space = match s {
            Space::Embedding => DistanceSpace::Embedding,
            Space::Plane => DistanceSpace::Plane,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = build_config(cli)?;
    let stage = match &cli.command {
        Command::Synth {
            dir,
            n_patents,
            n_domains,
            fixture_seed,
        } => {
            let spec = FixtureSpec {
                patents: *n_patents,
                domains: *n_domains,
                seed: *fixture_seed,
                ..FixtureSpec::default()
            };
            return write_fixture(dir, &spec);
        }
        Command::Config => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        Command::Run { stage } if stage == "all" => return Pipeline::new(cfg)?.run_all(),
        Command::Run { stage } => stage.parse()?,
        Command::Ingest => Stage::Ingest,
        Command::Textembed => Stage::TextEmbed,
        Command::Graphembed => Stage::GraphEmbed,
        Command::Project => Stage::Project,
        Command::Landscape => Stage::Landscape,
        Command::Analyze => Stage::Analyze,
        Command::Export => Stage::Export,
    };
    Pipeline::new(cfg)?.run(stage)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
