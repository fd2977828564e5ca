//! Implementations of the subcommands. Every command is deterministic
//! given its configuration and the cache state; artifacts land in the
//! configured output directory through atomic writes.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

use carpet::fem::{
    beta_coefficients, beta_sum_squares, beta_sum_squares_bound, build_mesh, convergence_csv,
    refinement_table, sector_analysis, solution_csv, solve_mixed_bvp,
};
use carpet::geometry::{carpet_cells_json, emit_carpet_svg, SvgOptions};
use carpet::graphs::{
    build_graph_with_tolerance, graph_json, graph_stats, graph_svg, GraphKind,
};
use carpet::network::{
    current_energy, kirchhoff_residual, resistance_json, side_fluxes, solve_potential,
    unit_flux_current,
};
use carpet::report::{fmt_f64, to_json_string};
use carpet::scaling::{duality_check, sandwich_check, scaling_json, scaling_report};
use carpet::{BoundaryClass, CarpetParams, GraphSymmetry, SolverOptions};

use crate::cache::{atomic_write, Cache};
use crate::config::{OutputFormat, RunConfig};

pub struct Ctx {
    pub config: RunConfig,
    /// `Some` only when caching is enabled.
    pub cache: Option<Cache>,
}

impl Ctx {
    fn params(&self) -> anyhow::Result<CarpetParams> {
        Ok(CarpetParams::new(self.config.n)?)
    }

    fn options(&self) -> SolverOptions {
        self.config.solver_options()
    }

    /// Write one artifact into the output directory and announce it.
    fn emit(&self, name: &str, content: &str) -> anyhow::Result<()> {
        let path = self.config.out_dir.join(name);
        atomic_write(&path, content.as_bytes())?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn check_graph_level(&self, m: u32) -> anyhow::Result<()> {
        if m < 1 {
            bail!("graph level m must be at least 1 (level 0 has no electrode sets)");
        }
        if m > self.config.graph_m_max {
            bail!(
                "m = {m} exceeds the configured cap graph_m_max = {} (raise --m-max)",
                self.config.graph_m_max
            );
        }
        Ok(())
    }

    fn check_fem_level(&self, level: u32, k: u32) -> anyhow::Result<()> {
        if level > self.config.fem_n_max {
            bail!(
                "level = {level} exceeds the configured cap fem_n_max = {} (raise --n-max)",
                self.config.fem_n_max
            );
        }
        if k > self.config.refine_k_max {
            bail!(
                "k = {k} exceeds the configured cap refine_k_max = {} (raise --k-max)",
                self.config.refine_k_max
            );
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------

pub fn run_gen(ctx: &Ctx, level: u32, highlight_ab: bool, size: u32) -> anyhow::Result<()> {
    ctx.check_fem_level(level, 0)?;
    let params = ctx.params()?;
    let n = ctx.config.n;
    let mut wrote = false;
    if ctx.config.wants(OutputFormat::Svg) {
        let svg = emit_carpet_svg(&params, level, &SvgOptions { highlight_ab, size })?;
        ctx.emit(&format!("carpet-N{n}-level{level}.svg"), &svg)?;
        wrote = true;
    }
    if ctx.config.wants(OutputFormat::Json) {
        let json = carpet_cells_json(&params, level)?;
        ctx.emit(&format!("carpet-N{n}-level{level}.json"), &json)?;
        wrote = true;
    }
    if !wrote {
        bail!("gen emits json and svg, but neither format was requested");
    }
    Ok(())
}

// ---------------------------------------------------------------------
// graph
// ---------------------------------------------------------------------

pub fn run_graph(ctx: &Ctx, kind: GraphKind, m: u32) -> anyhow::Result<()> {
    ctx.check_graph_level(m)?;
    let params = ctx.params()?;
    let graph = build_graph_with_tolerance(&params, m, kind, ctx.config.snap_tol_multiplier)?;
    let stats = graph_stats(&graph);
    let n = ctx.config.n;
    let label = kind.label();
    let mut wrote = false;
    if ctx.config.wants(OutputFormat::Json) {
        ctx.emit(&format!("graph-N{n}-{label}{m}.json"), &graph_json(&graph)?)?;
        wrote = true;
    }
    if ctx.config.wants(OutputFormat::Svg) {
        ctx.emit(&format!("graph-N{n}-{label}{m}.svg"), &graph_svg(&graph)?)?;
        wrote = true;
    }
    if !wrote {
        bail!("graph emits json and svg, but neither format was requested");
    }
    println!(
        "vertices = {}, edges = {}, components = {}",
        graph.vertex_count(),
        graph.edge_count(),
        stats.component_count
    );
    Ok(())
}

// ---------------------------------------------------------------------
// resist
// ---------------------------------------------------------------------

/// Everything that affects the numerical result, in canonical text form.
fn resist_cache_key(config: &RunConfig, kind: GraphKind, m: u32) -> String {
    format!(
        "resist\nN = {}\nkind = {}\nm = {m}\nsnap_tol_multiplier = {}\ncg_rel_tol = {}\ndirect_limit = {}\n",
        config.n,
        kind.label(),
        fmt_f64(config.snap_tol_multiplier),
        fmt_f64(config.cg_rel_tol),
        config.direct_limit
    )
}

pub fn run_resist(ctx: &Ctx, kind: GraphKind, m: u32) -> anyhow::Result<()> {
    ctx.check_graph_level(m)?;
    let key = resist_cache_key(&ctx.config, kind, m);
    if let Some(cache) = &ctx.cache {
        if let Some(mut value) = cache.lookup(&key) {
            value["cached"] = serde_json::Value::Bool(true);
            print!("{}", to_json_string(&value)?);
            return Ok(());
        }
    }
    let params = ctx.params()?;
    let graph = build_graph_with_tolerance(&params, m, kind, ctx.config.snap_tol_multiplier)?;
    let solution = solve_potential(&graph, &ctx.options())?;
    let mut value: serde_json::Value = serde_json::from_str(&resistance_json(&graph, &solution)?)?;
    value["cached"] = serde_json::Value::Bool(false);
    let document = to_json_string(&value)?;
    if let Some(cache) = &ctx.cache {
        cache.store(&key, &document)?;
    }
    print!("{document}");
    Ok(())
}

// ---------------------------------------------------------------------
// fem
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct FemSummary {
    #[serde(rename = "N")]
    n: u32,
    level: u32,
    refinement: u32,
    nodes: usize,
    triangles: usize,
    energy: f64,
    resistance: f64,
    method: carpet::SolveMethod,
}

pub fn run_fem(ctx: &Ctx, level: u32, k: u32, table: bool) -> anyhow::Result<()> {
    ctx.check_fem_level(level, k)?;
    let params = ctx.params()?;
    let options = ctx.options();
    let mesh = build_mesh(&params, level, k)?;
    let solution = solve_mixed_bvp(&mesh, &options)?;
    let n = ctx.config.n;
    let stem = format!("fem-N{n}-n{level}-k{k}");
    let mut wrote = false;
    if ctx.config.wants(OutputFormat::Json) {
        let summary = FemSummary {
            n,
            level,
            refinement: k,
            nodes: mesh.node_count(),
            triangles: mesh.triangle_count(),
            energy: solution.energy,
            resistance: solution.resistance,
            method: solution.method,
        };
        ctx.emit(&format!("{stem}.json"), &to_json_string(&summary)?)?;
        wrote = true;
    }
    if ctx.config.wants(OutputFormat::Csv) {
        ctx.emit(
            &format!("{stem}-solution.csv"),
            &solution_csv(&mesh, &solution.potential),
        )?;
        wrote = true;
    }
    if table {
        let ladder = refinement_table(&params, level, k, &options)?;
        ctx.emit(&format!("{stem}-convergence.csv"), &convergence_csv(&ladder))?;
        wrote = true;
    }
    if !wrote {
        bail!("fem emits json and csv, but neither format was requested");
    }
    Ok(())
}

// ---------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Duality,
    Symmetry,
    Sector,
    Beta,
    Sandwich,
    Thomson,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Duality => "duality",
            Suite::Symmetry => "symmetry",
            Suite::Sector => "sector",
            Suite::Beta => "beta",
            Suite::Sandwich => "sandwich",
            Suite::Thomson => "thomson",
        }
    }
}

const VERIFY_TOL: f64 = 1e-9;

pub fn run_verify(ctx: &Ctx, suite: Suite) -> anyhow::Result<()> {
    let (checks, failures) = match suite {
        Suite::Duality => verify_duality(ctx)?,
        Suite::Symmetry => verify_symmetry(ctx)?,
        Suite::Sector => verify_sector(ctx)?,
        Suite::Beta => verify_beta(ctx)?,
        Suite::Sandwich => verify_sandwich(ctx)?,
        Suite::Thomson => verify_thomson(ctx)?,
    };
    if failures.is_empty() {
        println!("verify {}: {checks} checks passed", suite.name());
        Ok(())
    } else {
        for failure in &failures {
            eprintln!("failed: {failure}");
        }
        Err(anyhow!(
            "verify {}: {} of {checks} checks failed",
            suite.name(),
            failures.len()
        ))
    }
}

fn verify_duality(ctx: &Ctx) -> anyhow::Result<(usize, Vec<String>)> {
    let params = ctx.params()?;
    let report = duality_check(&params, ctx.config.graph_m_max, &ctx.options())?;
    let mut failures = Vec::new();
    for row in &report.rows {
        if row.deviation > VERIFY_TOL {
            failures.push(format!(
                "(N={}, m={}, duality): |R_G/(2 R_D) − 1| = {:e}",
                ctx.config.n, row.level, row.deviation
            ));
        }
    }
    Ok((report.rows.len(), failures))
}

fn verify_symmetry(ctx: &Ctx) -> anyhow::Result<(usize, Vec<String>)> {
    let params = ctx.params()?;
    let options = ctx.options();
    let n = ctx.config.n;
    let mut checks = 0;
    let mut failures = Vec::new();
    for kind in [GraphKind::G, GraphKind::D] {
        for m in 1..=ctx.config.graph_m_max {
            let graph = build_graph_with_tolerance(&params, m, kind, ctx.config.snap_tol_multiplier)?;
            let solution = solve_potential(&graph, &options)?;
            let u: Vec<f64> = solution.potential.iter().map(|v| 2.0 * v - 1.0).collect();
            for (sym, sign, name) in [
                (GraphSymmetry::Theta2, -1.0, "theta2"),
                (GraphSymmetry::Conj, 1.0, "conj"),
            ] {
                checks += 1;
                let perm = graph.symmetry_permutation(sym)?;
                let worst = u
                    .iter()
                    .enumerate()
                    .map(|(i, &ui)| (u[perm.map[i] as usize] - sign * ui).abs())
                    .fold(0.0f64, f64::max);
                if worst > VERIFY_TOL {
                    failures.push(format!(
                        "(N={n}, {}{m}, {name}): residual {worst:e}",
                        kind.label()
                    ));
                }
            }
        }
    }
    Ok((checks, failures))
}

fn verify_sector(ctx: &Ctx) -> anyhow::Result<(usize, Vec<String>)> {
    let params = ctx.params()?;
    let options = ctx.options();
    let n = ctx.config.n;
    let mut checks = 0;
    let mut failures = Vec::new();
    for level in 0..=ctx.config.fem_n_max {
        let k = ctx.config.refine_k_max.saturating_sub(level);
        let mesh = build_mesh(&params, level, k)?;
        let solution = solve_mixed_bvp(&mesh, &options)?;
        let sectors = sector_analysis(&mesh, &solution)?;
        checks += 2;
        let identity = (sectors.identity_lhs - sectors.identity_rhs).abs();
        if identity > VERIFY_TOL * sectors.identity_lhs {
            failures.push(format!(
                "(N={n}, n={level}, identity): |4/R − 2N(E_v+E_w)| = {identity:e}"
            ));
        }
        let scale = (sectors.even_energy * sectors.odd_energy).sqrt();
        if sectors.orthogonality.abs() > VERIFY_TOL * scale {
            failures.push(format!(
                "(N={n}, n={level}, orthogonality): integral {:e}",
                sectors.orthogonality
            ));
        }
    }
    Ok((checks, failures))
}

fn verify_beta(ctx: &Ctx) -> anyhow::Result<(usize, Vec<String>)> {
    let n = ctx.config.n;
    let mut checks = 0;
    let mut failures = Vec::new();
    // deterministic low-discrepancy triples; the identity is algebraic,
    // so coverage matters more than randomness
    for trial in 0..2000u32 {
        let t = f64::from(trial);
        let i_first = 2.0 * (t * 0.6180339887498949).fract() - 1.0;
        let i_mid = 2.0 * (t * 0.4142135623730951).fract() - 1.0;
        let fluxes = (i_first, i_mid, -(i_first + i_mid));
        let beta = beta_coefficients(n, fluxes)?;
        let literal: f64 = beta.iter().map(|b| b * b).sum();
        let closed = beta_sum_squares(n, fluxes);
        checks += 2;
        if (literal - closed).abs() > 1e-12 * literal.max(1e-30) {
            failures.push(format!(
                "(N={n}, trial={trial}, closed-form): Σβ² = {literal:.17} vs {closed:.17}"
            ));
        }
        let bound = beta_sum_squares_bound(n, fluxes);
        let flux_sq = fluxes.0 * fluxes.0 + fluxes.1 * fluxes.1 + fluxes.2 * fluxes.2;
        if flux_sq > 1e-20 && literal >= bound {
            failures.push(format!(
                "(N={n}, trial={trial}, bound): Σβ² = {literal:.17} vs bound {bound:.17}"
            ));
        }
        if failures.len() > 20 {
            break;
        }
    }
    Ok((checks, failures))
}

fn verify_sandwich(ctx: &Ctx) -> anyhow::Result<(usize, Vec<String>)> {
    let params = ctx.params()?;
    let report = sandwich_check(
        &params,
        ctx.config.fem_n_max,
        ctx.config.refine_k_max,
        ctx.config.slack,
        &ctx.options(),
    )?;
    let mut checks = 0;
    let mut failures = Vec::new();
    if report.incomplete {
        failures.push(format!(
            "(N={}, -, completeness): some level could not be computed",
            ctx.config.n
        ));
    }
    for entry in &report.entries {
        for (name, bound) in [
            ("glue-lower", &entry.glue_lower),
            ("glue-upper", &entry.glue_upper),
            ("product-lower", &entry.product_lower),
            ("product-upper", &entry.product_upper),
        ] {
            if let Some(bound) = bound {
                checks += 1;
                if !bound.holds {
                    failures.push(format!(
                        "(N={}, n={} m={}, {name}): {} vs {}",
                        ctx.config.n,
                        entry.n,
                        entry.m,
                        fmt_f64(bound.lhs),
                        fmt_f64(bound.rhs)
                    ));
                }
            }
        }
    }
    Ok((checks, failures))
}

fn verify_thomson(ctx: &Ctx) -> anyhow::Result<(usize, Vec<String>)> {
    let params = ctx.params()?;
    let options = ctx.options();
    let n = ctx.config.n;
    let per_class = 1.0 / f64::from(n);
    let mut checks = 0;
    let mut failures = Vec::new();
    for kind in [GraphKind::G, GraphKind::D] {
        for m in 1..=ctx.config.graph_m_max {
            let graph = build_graph_with_tolerance(&params, m, kind, ctx.config.snap_tol_multiplier)?;
            let solution = solve_potential(&graph, &options)?;
            let current = unit_flux_current(&graph, &solution);
            let label = format!("{}{m}", kind.label());
            checks += 3;
            let energy = current_energy(&graph, &current);
            if (energy / solution.resistance - 1.0).abs() > VERIFY_TOL {
                failures.push(format!(
                    "(N={n}, {label}, energy): current energy {} vs R {}",
                    fmt_f64(energy),
                    fmt_f64(solution.resistance)
                ));
            }
            let terminals: Vec<u32> =
                [graph.boundary_a.clone(), graph.boundary_b.clone()].concat();
            let max_current = current.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
            let residual = kirchhoff_residual(&graph, &current, &terminals);
            if residual > VERIFY_TOL * max_current.max(1.0) {
                failures.push(format!(
                    "(N={n}, {label}, kirchhoff): interior residual {residual:e}"
                ));
            }
            let mut worst_side = 0.0f64;
            for sf in side_fluxes(&graph, &current)? {
                let expected = match sf.class {
                    BoundaryClass::A => -per_class,
                    BoundaryClass::B => per_class,
                    BoundaryClass::Other => continue,
                };
                worst_side = worst_side.max((sf.flux - expected).abs());
            }
            if worst_side > VERIFY_TOL {
                failures.push(format!(
                    "(N={n}, {label}, side-flux): worst deviation {worst_side:e} from ±1/N"
                ));
            }
        }
    }
    Ok((checks, failures))
}

// ---------------------------------------------------------------------
// scaling
// ---------------------------------------------------------------------

pub fn run_scaling(ctx: &Ctx) -> anyhow::Result<()> {
    let params = ctx.params()?;
    let report = scaling_report(
        &params,
        ctx.config.graph_m_max,
        ctx.config.fem_n_max,
        ctx.config.refine_k_max,
        ctx.config.slack,
        &ctx.options(),
    )
    .context("assembling the scaling report")?;
    let name = format!("scaling-N{}.json", ctx.config.n);
    ctx.emit(&name, &scaling_json(&report)?)?;
    println!(
        "rho estimate: last ratio = {}, regression = {}, bounds hold: {}",
        fmt_f64(report.rho.last_ratio),
        fmt_f64(report.rho.regression),
        report.sandwich.all_hold
    );
    Ok(())
}

/// Where the cache lives: flag, else environment variable, else a local
/// default.
pub fn resolve_cache_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(".carpet-cache"))
}
