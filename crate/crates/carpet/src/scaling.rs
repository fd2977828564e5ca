//! Resistance scaling across levels: sequences, graph duality, estimates
//! of the scaling factor ρ, sandwich bounds, and the Fekete-type
//! localization intervals they imply.

use serde::Serialize;

use crate::error::{CarpetError, Result};
use crate::fem::{build_mesh, solve_mixed_bvp};
use crate::geometry::CarpetParams;
use crate::graphs::{build_graph, GraphKind};
use crate::network::solve_potential;
use crate::report::to_json_string;
use crate::solver::SolverOptions;

/// One level's outcome in a resistance sweep.
#[derive(Debug, Clone, Serialize)]
pub struct LevelResistance {
    pub level: u32,
    pub resistance: Option<f64>,
    pub vertices: Option<usize>,
    /// Why this level has no value, if it failed.
    pub error: Option<String>,
}

/// Effective resistances `R_m` for m = 1..m_max on one graph family.
#[derive(Debug, Clone, Serialize)]
pub struct ResistanceSequence {
    #[serde(rename = "N")]
    pub n: u32,
    pub kind: GraphKind,
    pub levels: Vec<LevelResistance>,
    /// Whether the recorded finite values are strictly increasing in m.
    pub strictly_increasing: bool,
}

impl ResistanceSequence {
    /// The finite values, in level order.
    pub fn finite_values(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.resistance).collect()
    }
}

/// Compute `R_m` for m = 1..=m_max, recording partial results: a failing
/// level is recorded with its error and the sweep stops there (deeper
/// levels can only be larger).
pub fn resistance_sequence(
    params: &CarpetParams,
    kind: GraphKind,
    m_max: u32,
    options: &SolverOptions,
) -> ResistanceSequence {
    let mut levels = Vec::new();
    for m in 1..=m_max {
        let outcome = build_graph(params, m, kind).and_then(|graph| {
            let solution = solve_potential(&graph, options)?;
            Ok((graph.vertex_count(), solution.resistance))
        });
        match outcome {
            Ok((vertices, resistance)) => levels.push(LevelResistance {
                level: m,
                resistance: Some(resistance),
                vertices: Some(vertices),
                error: None,
            }),
            Err(e) => {
                levels.push(LevelResistance {
                    level: m,
                    resistance: None,
                    vertices: None,
                    error: Some(e.to_string()),
                });
                break;
            }
        }
    }
    let finite: Vec<f64> = levels.iter().filter_map(|l| l.resistance).collect();
    let strictly_increasing = finite.windows(2).all(|w| w[1] > w[0]);
    ResistanceSequence {
        n: params.n(),
        kind,
        levels,
        strictly_increasing,
    }
}

/// One level of the G-versus-D comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualityRow {
    pub level: u32,
    pub resistance_g: f64,
    pub resistance_d: f64,
    /// `|R^G − 2·R^D| / R^G`.
    pub deviation: f64,
}

/// The exact-doubling check `R_m^G = 2·R_m^D` across levels.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub rows: Vec<DualityRow>,
    pub max_deviation: f64,
}

/// Pair two already-computed sequences level by level.
pub fn duality_from_sequences(
    g: &ResistanceSequence,
    d: &ResistanceSequence,
) -> Result<DualityReport> {
    assert_eq!(g.n, d.n);
    let mut rows = Vec::new();
    for (lg, ld) in g.levels.iter().zip(&d.levels) {
        debug_assert_eq!(lg.level, ld.level);
        if let (Some(rg), Some(rd)) = (lg.resistance, ld.resistance) {
            rows.push(DualityRow {
                level: lg.level,
                resistance_g: rg,
                resistance_d: rd,
                deviation: (rg - 2.0 * rd).abs() / rg,
            });
        }
    }
    if rows.is_empty() {
        return Err(CarpetError::SequenceTooShort(
            "no level has resistances for both graph families".into(),
        ));
    }
    let max_deviation = rows.iter().fold(0.0f64, |acc, r| acc.max(r.deviation));
    Ok(DualityReport {
        n: g.n,
        rows,
        max_deviation,
    })
}

/// Solve both families up to m_max and compare.
pub fn duality_check(
    params: &CarpetParams,
    m_max: u32,
    options: &SolverOptions,
) -> Result<DualityReport> {
    let g = resistance_sequence(params, GraphKind::G, m_max, options);
    let d = resistance_sequence(params, GraphKind::D, m_max, options);
    duality_from_sequences(&g, &d)
}

/// Estimates of the resistance-scaling factor from a sequence `R_m`.
#[derive(Debug, Clone, Serialize)]
pub struct RhoEstimate {
    /// Consecutive ratios `R_{m+1}/R_m`.
    pub ratios: Vec<f64>,
    /// Differences of consecutive ratios, as observed — never filtered.
    pub ratio_diffs: Vec<f64>,
    /// Whether |ratio_diffs| is non-increasing (geometric-like decay).
    pub diffs_nonincreasing: bool,
    /// The last ratio: the crudest estimator.
    pub last_ratio: f64,
    /// `exp(slope)` of the least-squares line through `(m, ln R_m)`.
    pub regression: f64,
}

/// Estimate the per-level growth factor of a positive sequence.
///
/// Both estimators are invariant under rescaling the sequence by a
/// constant. Requires at least two entries, all positive and finite.
pub fn rho_estimate(resistances: &[f64]) -> Result<RhoEstimate> {
    if resistances.len() < 2 {
        return Err(CarpetError::SequenceTooShort(format!(
            "growth estimation needs at least two values, got {}",
            resistances.len()
        )));
    }
    for (index, &value) in resistances.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(CarpetError::NonPositiveEntry { index, value });
        }
    }
    let ratios: Vec<f64> = resistances.windows(2).map(|w| w[1] / w[0]).collect();
    let ratio_diffs: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    let diffs_nonincreasing = ratio_diffs
        .windows(2)
        .all(|w| w[1].abs() <= w[0].abs());

    let count = resistances.len() as f64;
    let x_mean = (resistances.len() - 1) as f64 / 2.0;
    let logs: Vec<f64> = resistances.iter().map(|r| r.ln()).collect();
    let y_mean = logs.iter().sum::<f64>() / count;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (i, &y) in logs.iter().enumerate() {
        let dx = i as f64 - x_mean;
        numerator += dx * (y - y_mean);
        denominator += dx * dx;
    }
    Ok(RhoEstimate {
        last_ratio: ratios[ratios.len() - 1],
        regression: (numerator / denominator).exp(),
        ratios,
        ratio_diffs,
        diffs_nonincreasing,
    })
}

/// One verified inequality.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckedBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn checked(lhs: f64, rhs: f64) -> CheckedBound {
    CheckedBound {
        lhs,
        rhs,
        holds: lhs <= rhs,
    }
}

/// The sandwich inequalities at one index pair (n, m).
#[derive(Debug, Clone, Serialize)]
pub struct SandwichEntry {
    pub n: u32,
    pub m: u32,
    /// Gluing lower bound: `(N/2)·R_n·R_m^D ≤ (1+δ)·R_{n+m}`.
    pub glue_lower: Option<CheckedBound>,
    /// Gluing upper bound: `R_{n+m} ≤ (1+δ)·(11/9)·N²·R_n·R_m^G`.
    pub glue_upper: Option<CheckedBound>,
    /// Product lower bound with c = (9/44N)/R₀: `c·R_n·R_m ≤ (1+δ)·R_{n+m}`.
    pub product_lower: Option<CheckedBound>,
    /// Product upper bound with C = (44N/9)/R₀: `R_{n+m} ≤ (1+δ)·C·R_n·R_m`.
    pub product_upper: Option<CheckedBound>,
    /// Why some or all checks are absent at this pair.
    pub skipped: Option<String>,
}

/// A continuum resistance with the mesh parameters that produced it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuumResistance {
    pub level: u32,
    pub refinement: u32,
    pub nodes: usize,
    pub resistance: f64,
}

/// All sandwich inequalities with `n + m ≤ depth`.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub delta: f64,
    pub depth: u32,
    pub continuum: Vec<ContinuumResistance>,
    /// Graph resistances `R_m^G` for m = 1.. and `R_m^D` likewise.
    pub graph_g: Vec<f64>,
    pub graph_d: Vec<f64>,
    pub c_lower: f64,
    pub c_upper: f64,
    pub entries: Vec<SandwichEntry>,
    pub all_hold: bool,
    /// True when some requested level could not be computed; the affected
    /// entries carry a `skipped` reason instead of silently vanishing.
    pub incomplete: bool,
}

/// Verify the two-sided resistance scaling estimates.
///
/// Continuum resistances come from meshes refined with a shrinking budget
/// `k = refinement_budget − n`, keeping the triangle count roughly
/// level-independent. The slack `δ` absorbs discretization error: the
/// inequalities are exact in the limit but the computed values sit on
/// pre-limit meshes.
pub fn sandwich_check(
    params: &CarpetParams,
    depth: u32,
    refinement_budget: u32,
    delta: f64,
    options: &SolverOptions,
) -> Result<SandwichReport> {
    let nf = params.n() as f64;
    let mut incomplete = false;

    let solve_level = |n: u32| -> Result<ContinuumResistance> {
        let k = refinement_budget.saturating_sub(n);
        let mesh = build_mesh(params, n, k)?;
        let solution = solve_mixed_bvp(&mesh, options)?;
        Ok(ContinuumResistance {
            level: n,
            refinement: k,
            nodes: mesh.nodes.len(),
            resistance: solution.resistance,
        })
    };

    // R₀ is load-bearing (it sets the product constants); fail loudly.
    let mut continuum = vec![solve_level(0)?];
    for n in 1..=depth {
        match solve_level(n) {
            Ok(c) => continuum.push(c),
            Err(_) => {
                incomplete = true;
                break;
            }
        }
    }

    let mut graph_g = Vec::new();
    let mut graph_d = Vec::new();
    for m in 1..=depth {
        let solved = build_graph(params, m, GraphKind::G).and_then(|g| {
            let rg = solve_potential(&g, options)?.resistance;
            let d = build_graph(params, m, GraphKind::D)?;
            let rd = solve_potential(&d, options)?.resistance;
            Ok((rg, rd))
        });
        match solved {
            Ok((rg, rd)) => {
                graph_g.push(rg);
                graph_d.push(rd);
            }
            Err(_) => {
                incomplete = true;
                break;
            }
        }
    }

    let r0 = continuum[0].resistance;
    let c_lower = 9.0 / (44.0 * nf) / r0;
    let c_upper = 44.0 * nf / 9.0 / r0;
    debug_assert!((c_lower * c_upper * r0 * r0 - 1.0).abs() < 1e-12);

    let slack = 1.0 + delta;
    let fem = |level: u32| continuum.get(level as usize).map(|c| c.resistance);
    let mut entries = Vec::new();
    for n in 0..=depth {
        for m in 0..=(depth - n) {
            if n == 0 && m == 0 {
                entries.push(SandwichEntry {
                    n,
                    m,
                    glue_lower: None,
                    glue_upper: None,
                    product_lower: None,
                    product_upper: None,
                    skipped: Some("n = m = 0 compares a level with itself".into()),
                });
                continue;
            }
            let (Some(r_n), Some(r_m), Some(r_nm)) = (fem(n), fem(m), fem(n + m)) else {
                entries.push(SandwichEntry {
                    n,
                    m,
                    glue_lower: None,
                    glue_upper: None,
                    product_lower: None,
                    product_upper: None,
                    skipped: Some("a required continuum level is missing".into()),
                });
                continue;
            };
            let (glue_lower, glue_upper, skipped) = if m == 0 {
                (
                    None,
                    None,
                    Some("graph terminals are undefined at level 0; product checks only".into()),
                )
            } else if let Some(&rd) = graph_d.get((m - 1) as usize) {
                let rg = graph_g[(m - 1) as usize];
                (
                    Some(checked(nf / 2.0 * r_n * rd, slack * r_nm)),
                    Some(checked(r_nm, slack * (11.0 / 9.0) * nf * nf * r_n * rg)),
                    None,
                )
            } else {
                (
                    None,
                    None,
                    Some("a required graph level is missing".into()),
                )
            };
            entries.push(SandwichEntry {
                n,
                m,
                glue_lower,
                glue_upper,
                product_lower: Some(checked(c_lower * r_n * r_m, slack * r_nm)),
                product_upper: Some(checked(r_nm, slack * c_upper * r_n * r_m)),
                skipped,
            });
        }
    }

    let all_hold = entries.iter().all(|e| {
        [e.glue_lower, e.glue_upper, e.product_lower, e.product_upper]
            .iter()
            .flatten()
            .all(|b| b.holds)
    });
    Ok(SandwichReport {
        n: params.n(),
        delta,
        depth,
        continuum,
        graph_g,
        graph_d,
        c_lower,
        c_upper,
        entries,
        all_hold,
        incomplete,
    })
}

/// One localization interval for ρ.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeketeInterval {
    pub level: u32,
    /// Bounds on ln ρ: `(1/n)·ln(c·R_n)` and `(1/n)·ln(C·R_n)`.
    pub log_lower: f64,
    pub log_upper: f64,
    /// The same bounds exponentiated.
    pub rho_lower: f64,
    pub rho_upper: f64,
}

/// Nested localization of ρ from super/sub-additivity.
#[derive(Debug, Clone, Serialize)]
pub struct FeketeReport {
    pub intervals: Vec<FeketeInterval>,
    /// Intersection of all intervals in ρ units, if non-empty.
    pub intersection: Option<[f64; 2]>,
    /// An empty intersection is reported, not fatal: it would mean the
    /// computed resistances contradict the scaling picture.
    pub empty_intersection: bool,
}

/// Build the per-level ρ intervals from continuum resistances `R_0..R_n`.
///
/// `ln(c·R_n)` is superadditive and `ln(C·R_n)` subadditive (with
/// `c = (9/44N)/R₀`, `C = (44N/9)/R₀`), so `(1/n)·ln(c·R_n) ≤ ln ρ ≤
/// (1/n)·ln(C·R_n)` for every n; each interval has width `(2/n)·ln(44N/9)`.
pub fn fekete_report(n: u32, continuum: &[f64]) -> Result<FeketeReport> {
    if continuum.len() < 2 {
        return Err(CarpetError::SequenceTooShort(
            "interval report needs the level-0 resistance and at least one more".into(),
        ));
    }
    for (index, &value) in continuum.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(CarpetError::NonPositiveEntry { index, value });
        }
    }
    let nf = n as f64;
    let r0 = continuum[0];
    let c_lower = 9.0 / (44.0 * nf) / r0;
    let c_upper = 44.0 * nf / 9.0 / r0;
    let intervals: Vec<FeketeInterval> = continuum
        .iter()
        .enumerate()
        .skip(1)
        .map(|(level, &r)| {
            let inv = 1.0 / level as f64;
            let log_lower = inv * (c_lower * r).ln();
            let log_upper = inv * (c_upper * r).ln();
            FeketeInterval {
                level: level as u32,
                log_lower,
                log_upper,
                rho_lower: log_lower.exp(),
                rho_upper: log_upper.exp(),
            }
        })
        .collect();
    let lower = intervals.iter().fold(f64::NEG_INFINITY, |a, i| a.max(i.rho_lower));
    let upper = intervals.iter().fold(f64::INFINITY, |a, i| a.min(i.rho_upper));
    let empty_intersection = lower > upper;
    Ok(FeketeReport {
        intervals,
        intersection: (!empty_intersection).then_some([lower, upper]),
        empty_intersection,
    })
}

/// Everything the scaling analysis produces, for one carpet family.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub sequences: Vec<ResistanceSequence>,
    pub duality: DualityReport,
    pub rho: RhoEstimate,
    pub sandwich: SandwichReport,
    pub fekete: FeketeReport,
}

/// Run the full scaling analysis.
///
/// Graph sweeps go to `m_max`; ρ is estimated from the G sequence; the
/// sandwich and interval reports use continuum solves to `fem_depth` with
/// the given refinement budget and slack δ.
pub fn scaling_report(
    params: &CarpetParams,
    m_max: u32,
    fem_depth: u32,
    refinement_budget: u32,
    delta: f64,
    options: &SolverOptions,
) -> Result<ScalingReport> {
    let g = resistance_sequence(params, GraphKind::G, m_max, options);
    let d = resistance_sequence(params, GraphKind::D, m_max, options);
    let duality = duality_from_sequences(&g, &d)?;
    let rho = rho_estimate(&g.finite_values())?;
    let sandwich = sandwich_check(params, fem_depth, refinement_budget, delta, options)?;
    let continuum: Vec<f64> = sandwich.continuum.iter().map(|c| c.resistance).collect();
    let fekete = fekete_report(params.n(), &continuum)?;
    Ok(ScalingReport {
        n: params.n(),
        sequences: vec![g, d],
        duality,
        rho,
        sandwich,
        fekete,
    })
}

/// JSON dump of a scaling report.
pub fn scaling_json(report: &ScalingReport) -> Result<String> {
    to_json_string(report)
}
