//! Command-line front end: construct pre-fractals and their graph
//! approximations, compute effective resistances on graphs and meshes,
//! verify the resistance identities, and emit the scaling report.

mod cache;
mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use carpet::graphs::GraphKind;

use cache::Cache;
use commands::{Ctx, Suite};
use config::{OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "carpet",
    version,
    about = "Pre-fractal carpets, their resistance networks, and the scaling analysis",
    after_help = "Configuration file format: `key = value` lines (floats with 17 \
                  significant digits round-trip exactly); keys are N, graph_m_max, \
                  fem_n_max, refine_k_max, direct_limit, cg_rel_tol, \
                  snap_tol_multiplier, slack, out_dir, cache, formats. Command-line \
                  flags override file values."
)]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Family parameter: the outer polygon has 4N sides.
    #[arg(long = "N", global = true, value_name = "N")]
    n: Option<u32>,

    /// Cap on the graph level m.
    #[arg(long, global = true, value_name = "M")]
    m_max: Option<u32>,

    /// Cap on the continuum level n.
    #[arg(long, global = true, value_name = "LEVEL")]
    n_max: Option<u32>,

    /// Cap on the mesh refinement k (and the refinement budget).
    #[arg(long, global = true, value_name = "K")]
    k_max: Option<u32>,

    /// Vertex-snapping tolerance multiplier, in (0, 1).
    #[arg(long, global = true, value_name = "MULT")]
    tol: Option<f64>,

    /// Slack δ for the two-sided resistance bounds, in (0, 1).
    #[arg(long, global = true, value_name = "DELTA")]
    slack: Option<f64>,

    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Formats to emit (comma separated).
    #[arg(long = "format", global = true, value_delimiter = ',', value_name = "FMT")]
    formats: Vec<OutputFormat>,

    /// Cache directory for `resist` results.
    #[arg(long, global = true, env = "CARPET_CACHE_DIR", value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    /// Disable the result cache.
    #[arg(long, global = true)]
    no_cache: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the level-n pre-fractal (SVG figure and cell-polygon JSON).
    Gen {
        /// Pre-fractal level n.
        #[arg(long)]
        level: u32,
        /// Overlay the two electrode boundary sets as thick strokes.
        #[arg(long)]
        highlight_ab: bool,
        /// Figure size in pixels.
        #[arg(long, default_value_t = 640)]
        size: u32,
    },
    /// Emit a graph approximation (JSON and SVG overlay).
    Graph {
        /// Which approximation: G (cell centers + side midpoints) or D
        /// (cell centers + side endpoints).
        #[arg(long, value_parser = parse_kind)]
        kind: GraphKind,
        /// Graph level m ≥ 1.
        #[arg(long)]
        m: u32,
    },
    /// Compute an effective resistance and print it as JSON.
    Resist {
        #[arg(long, value_parser = parse_kind)]
        kind: GraphKind,
        /// Graph level m ≥ 1.
        #[arg(long)]
        m: u32,
    },
    /// Solve the continuum mixed boundary value problem on one mesh.
    Fem {
        /// Pre-carpet level n.
        #[arg(long)]
        level: u32,
        /// Uniform refinement count k.
        #[arg(long)]
        k: u32,
        /// Also emit the k = 0..k convergence ladder as CSV.
        #[arg(long)]
        table: bool,
    },
    /// Run a named identity suite; exits nonzero on any failed check.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Emit the full scaling report (sequences, duality, ρ, sandwich,
    /// intervals) as JSON.
    Scaling,
    /// Print the effective configuration in canonical form (suitable for
    /// `--config`).
    Config,
}

fn parse_kind(s: &str) -> Result<GraphKind, String> {
    s.parse()
}

/// Defaults, then the config file, then command-line flags.
fn effective_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = cli.n {
        config.n = n;
    }
    if let Some(m_max) = cli.m_max {
        config.graph_m_max = m_max;
    }
    if let Some(n_max) = cli.n_max {
        config.fem_n_max = n_max;
    }
    if let Some(k_max) = cli.k_max {
        config.refine_k_max = k_max;
    }
    if let Some(tol) = cli.tol {
        config.snap_tol_multiplier = tol;
    }
    if let Some(slack) = cli.slack {
        config.slack = slack;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if !cli.formats.is_empty() {
        config.formats = cli.formats.clone();
    }
    if cli.no_cache {
        config.cache = false;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = effective_config(&cli)?;
    let cache = config
        .cache
        .then(|| Cache::new(commands::resolve_cache_dir(cli.cache_dir.clone())));
    let ctx = Ctx { config, cache };
    match cli.command {
        Command::Gen {
            level,
            highlight_ab,
            size,
        } => commands::run_gen(&ctx, level, highlight_ab, size),
        Command::Graph { kind, m } => commands::run_graph(&ctx, kind, m),
        Command::Resist { kind, m } => commands::run_resist(&ctx, kind, m),
        Command::Fem { level, k, table } => commands::run_fem(&ctx, level, k, table),
        Command::Verify { suite } => commands::run_verify(&ctx, suite),
        Command::Scaling => commands::run_scaling(&ctx),
        Command::Config => {
            print!("{}", ctx.config.canonical());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
