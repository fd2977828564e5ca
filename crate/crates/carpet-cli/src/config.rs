//! Run configuration: a flat set of knobs shared by every subcommand,
//! with a canonical `key = value` text representation that round-trips
//! losslessly (floats are written with 17 significant digits).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use carpet::report::fmt_f64;

/// Output formats a command may emit. Each command uses the subset it
/// supports: `gen` and `graph` produce json/svg, `fem` produces json/csv.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
}

impl OutputFormat {
    fn name(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            other => bail!("unknown output format `{other}` (expected json, csv, or svg)"),
        }
    }
}

/// All knobs a run depends on. Defaults are chosen so that every
/// subcommand completes in seconds on the default family member.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Family parameter N (the polygon has 4N sides).
    pub n: u32,
    /// Largest graph level `m` commands may request.
    pub graph_m_max: u32,
    /// Largest continuum level `n` commands may request.
    pub fem_n_max: u32,
    /// Largest mesh refinement `k`; also the refinement budget for the
    /// sandwich and scaling reports (level n gets `refine_k_max − n`).
    pub refine_k_max: u32,
    /// Unknown-count threshold above which the solver switches from the
    /// direct factorization to conjugate gradients.
    pub direct_limit: usize,
    /// Relative residual target for the iterative solver; in (0, 1).
    pub cg_rel_tol: f64,
    /// Vertex-snapping tolerance as a multiple of the cell diameter
    /// scale r^m; in (0, 1).
    pub snap_tol_multiplier: f64,
    /// Slack δ applied to the two-sided resistance bounds; in (0, 1).
    pub slack: f64,
    /// Directory for emitted artifacts.
    pub out_dir: PathBuf,
    /// Whether `resist` consults and fills the result cache.
    pub cache: bool,
    /// Formats to emit, in this order.
    pub formats: Vec<OutputFormat>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 2,
            graph_m_max: 4,
            fem_n_max: 2,
            refine_k_max: 6,
            direct_limit: 200_000,
            cg_rel_tol: 1e-12,
            snap_tol_multiplier: 1e-6,
            slack: 0.05,
            out_dir: PathBuf::from("out"),
            cache: true,
            formats: vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Svg],
        }
    }
}

impl RunConfig {
    /// Parse the `key = value` format; `#` starts a comment, blank lines
    /// are ignored, unknown keys are errors. Keys not present keep their
    /// default values.
    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        let mut config = RunConfig::default();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = index + 1;
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {lineno}: expected `key = value`, got `{line}`");
            };
            let (key, value) = (key.trim(), value.trim());
            let context = || format!("config line {lineno}: bad value for `{key}`");
            match key {
                "N" => config.n = value.parse().with_context(context)?,
                "graph_m_max" => config.graph_m_max = value.parse().with_context(context)?,
                "fem_n_max" => config.fem_n_max = value.parse().with_context(context)?,
                "refine_k_max" => config.refine_k_max = value.parse().with_context(context)?,
                "direct_limit" => config.direct_limit = value.parse().with_context(context)?,
                "cg_rel_tol" => config.cg_rel_tol = value.parse().with_context(context)?,
                "snap_tol_multiplier" => {
                    config.snap_tol_multiplier = value.parse().with_context(context)?
                }
                "slack" => config.slack = value.parse().with_context(context)?,
                "out_dir" => config.out_dir = PathBuf::from(value),
                "cache" => config.cache = value.parse().with_context(context)?,
                "formats" => {
                    config.formats = value
                        .split(',')
                        .map(OutputFormat::from_str)
                        .collect::<Result<_, _>>()
                        .with_context(context)?
                }
                other => bail!("config line {lineno}: unknown key `{other}`"),
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// The canonical text form: fixed key order, floats with 17
    /// significant digits. `parse(canonical(c)) == c` for every valid c.
    pub fn canonical(&self) -> String {
        let formats: Vec<&str> = self.formats.iter().map(|f| f.name()).collect();
        format!(
            "# carpet configuration (key = value)\n\
             N = {}\n\
             graph_m_max = {}\n\
             fem_n_max = {}\n\
             refine_k_max = {}\n\
             direct_limit = {}\n\
             cg_rel_tol = {}\n\
             snap_tol_multiplier = {}\n\
             slack = {}\n\
             out_dir = {}\n\
             cache = {}\n\
             formats = {}\n",
            self.n,
            self.graph_m_max,
            self.fem_n_max,
            self.refine_k_max,
            self.direct_limit,
            fmt_f64(self.cg_rel_tol),
            fmt_f64(self.snap_tol_multiplier),
            fmt_f64(self.slack),
            self.out_dir.display(),
            self.cache,
            formats.join(",")
        )
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n < 2 {
            bail!("N must be at least 2, got {}", self.n);
        }
        for (name, value) in [
            ("graph_m_max", self.graph_m_max),
            ("fem_n_max", self.fem_n_max),
            ("refine_k_max", self.refine_k_max),
        ] {
            if value == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.direct_limit == 0 {
            bail!("direct_limit must be positive");
        }
        for (name, value) in [
            ("cg_rel_tol", self.cg_rel_tol),
            ("snap_tol_multiplier", self.snap_tol_multiplier),
            ("slack", self.slack),
        ] {
            if !(value > 0.0 && value < 1.0) {
                bail!("{name} must lie in (0, 1), got {value}");
            }
        }
        if self.formats.is_empty() {
            bail!("at least one output format is required");
        }
        Ok(())
    }

    pub fn solver_options(&self) -> carpet::SolverOptions {
        carpet::SolverOptions {
            direct_limit: self.direct_limit,
            cg_rel_tol: self.cg_rel_tol,
            ..carpet::SolverOptions::default()
        }
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}
