//! Resistor-network analysis on the graph approximations.
//!
//! Every edge is a unit conductance. The harmonic potential `u` solves the
//! discrete Dirichlet problem `u ≡ 0` on A, `u ≡ 1` on B; its energy
//! `E = Σ_{xy} (u(x) − u(y))²` determines the effective resistance
//! `R = 1/E`, and the induced current `I(x→y) = u(x) − u(y)` is the unique
//! energy minimizer among unit-potential-drop flows. Scaling by `R` gives
//! the unit-flux current whose energy equals `R` (Thomson's principle).

use serde::Serialize;

use crate::error::{CarpetError, Result};
use crate::geometry::BoundaryClass;
use crate::graphs::GraphApprox;
use crate::report::{csv_document, fmt_f64, to_json_string};
use crate::solver::{solve_spd, SolveMethod, SolverOptions, SymmetricAssembler};

/// Harmonic potential and its derived quantities.
#[derive(Debug, Clone)]
pub struct NetworkSolution {
    /// Potential at every vertex (terminals included).
    pub potential: Vec<f64>,
    /// Dirichlet energy of the potential.
    pub energy: f64,
    /// Effective resistance between the terminal sets: `1/energy`.
    pub resistance: f64,
    /// How the reduced system was solved.
    pub method: SolveMethod,
}

/// Effective resistance between terminal sets, with disconnection as a
/// first-class outcome rather than an error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ResistanceResult {
    Finite(f64),
    Infinite,
}

impl ResistanceResult {
    pub fn finite(self) -> Option<f64> {
        match self {
            ResistanceResult::Finite(r) => Some(r),
            ResistanceResult::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ResistanceResult::Infinite)
    }
}

fn terminals_connected(graph: &GraphApprox, a: &[u32], b: &[u32]) -> bool {
    let n = graph.vertices.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }
    for e in &graph.edges {
        let (x, y) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if x != y {
            parent[x.max(y) as usize] = x.min(y);
        }
    }
    // every terminal must share one component
    let root = find(&mut parent, a[0]);
    a.iter()
        .chain(b.iter())
        .all(|&v| find(&mut parent, v) == root)
}

/// Solve for the harmonic potential with `u = 0` on the graph's A set and
/// `u = 1` on its B set.
pub fn solve_potential(graph: &GraphApprox, options: &SolverOptions) -> Result<NetworkSolution> {
    solve_potential_between(graph, &graph.boundary_a, &graph.boundary_b, options)
}

/// Solve for the harmonic potential with explicit terminal sets
/// (`u = 0` on `a`, `u = 1` on `b`).
pub fn solve_potential_between(
    graph: &GraphApprox,
    a: &[u32],
    b: &[u32],
    options: &SolverOptions,
) -> Result<NetworkSolution> {
    let n = graph.vertices.len();
    if a.is_empty() || b.is_empty() {
        return Err(CarpetError::InvalidBoundary(format!(
            "terminal sets must be non-empty (|A| = {}, |B| = {})",
            a.len(),
            b.len()
        )));
    }
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &v in a {
        fixed[v as usize] = Some(0.0);
    }
    for &v in b {
        if fixed[v as usize].is_some() {
            return Err(CarpetError::InvalidBoundary(format!(
                "vertex {v} lies in both terminal sets"
            )));
        }
        fixed[v as usize] = Some(1.0);
    }
    if !terminals_connected(graph, a, b) {
        return Err(CarpetError::Disconnected);
    }

    // Dirichlet elimination: index the free vertices, assemble the reduced
    // Laplacian row-by-row in sorted edge order, move terminal columns to
    // the right-hand side.
    let mut free_index: Vec<usize> = vec![usize::MAX; n];
    let mut free_count = 0usize;
    for v in 0..n {
        if fixed[v].is_none() {
            free_index[v] = free_count;
            free_count += 1;
        }
    }

    let mut assembler = SymmetricAssembler::new(free_count, 4 * graph.edges.len());
    let mut rhs = vec![0.0; free_count];
    for e in &graph.edges {
        let (x, y) = (e[0] as usize, e[1] as usize);
        match (fixed[x], fixed[y]) {
            (None, None) => {
                let (i, j) = (free_index[x], free_index[y]);
                assembler.add(i, i, 1.0);
                assembler.add(j, j, 1.0);
                assembler.add(i, j, -1.0);
                assembler.add(j, i, -1.0);
            }
            (None, Some(val)) => {
                let i = free_index[x];
                assembler.add(i, i, 1.0);
                rhs[i] += val;
            }
            (Some(val), None) => {
                let j = free_index[y];
                assembler.add(j, j, 1.0);
                rhs[j] += val;
            }
            (Some(_), Some(_)) => {}
        }
    }

    let (solution, method) = solve_spd(&assembler.build(), &rhs, options)?;

    let mut potential = vec![0.0; n];
    for v in 0..n {
        potential[v] = match fixed[v] {
            Some(val) => val,
            None => solution[free_index[v]],
        };
    }

    let energy = dirichlet_energy(graph, &potential);
    Ok(NetworkSolution {
        potential,
        energy,
        resistance: 1.0 / energy,
        method,
    })
}

/// `Σ_{xy ∈ E} (u(x) − u(y))²`, summed in sorted edge order.
pub fn dirichlet_energy(graph: &GraphApprox, potential: &[f64]) -> f64 {
    graph
        .edges
        .iter()
        .map(|e| {
            let d = potential[e[0] as usize] - potential[e[1] as usize];
            d * d
        })
        .sum()
}

/// Effective resistance between A and B, with disconnection distinguished.
pub fn effective_resistance(graph: &GraphApprox, options: &SolverOptions) -> Result<ResistanceResult> {
    match solve_potential(graph, options) {
        Ok(solution) => Ok(ResistanceResult::Finite(solution.resistance)),
        Err(CarpetError::Disconnected) => Ok(ResistanceResult::Infinite),
        Err(e) => Err(e),
    }
}

/// Ohm currents per edge: `I = u(x) − u(y)` for edge `[x, y]` (positive
/// means flow from the lower-index endpoint to the higher).
pub fn current_from_potential(graph: &GraphApprox, potential: &[f64]) -> Vec<f64> {
    graph
        .edges
        .iter()
        .map(|e| potential[e[0] as usize] - potential[e[1] as usize])
        .collect()
}

/// The Ohm current rescaled to total flux one: `Ĩ = R·I`. Its energy is
/// exactly the effective resistance, the Thomson minimum.
pub fn unit_flux_current(graph: &GraphApprox, solution: &NetworkSolution) -> Vec<f64> {
    current_from_potential(graph, &solution.potential)
        .into_iter()
        .map(|i| i * solution.resistance)
        .collect()
}

/// Energy `Σ I²/g = Σ I²` of an edge flow.
pub fn current_energy(graph: &GraphApprox, current: &[f64]) -> f64 {
    debug_assert_eq!(current.len(), graph.edges.len());
    current.iter().map(|i| i * i).sum()
}

/// Max over non-terminal vertices of |net current|, for Kirchhoff checks.
pub fn kirchhoff_residual(graph: &GraphApprox, current: &[f64], terminals: &[u32]) -> f64 {
    let mut net = vec![0.0; graph.vertices.len()];
    for (e, &i) in graph.edges.iter().zip(current) {
        net[e[0] as usize] -= i;
        net[e[1] as usize] += i;
    }
    for &t in terminals {
        net[t as usize] = 0.0;
    }
    net.iter().fold(0.0, |acc: f64, &v| acc.max(v.abs()))
}

/// Flux of an edge flow through boundary side `L_k`: the sum over the
/// side's boundary vertices of their net current into the network.
/// Positive means the side feeds current in (as B does, being the high
/// terminal); negative means it drains current (as A does).
///
/// For the Ohm current this is `−E/N` per A side and `+E/N` per B side;
/// for the unit-flux current, `∓1/N`.
pub fn side_flux(graph: &GraphApprox, current: &[f64], side: u16) -> Result<f64> {
    let classed = graph
        .vertices
        .iter()
        .any(|v| matches!(v.boundary, Some((_, s)) if s == side));
    if !classed {
        return Err(CarpetError::InvalidSide(side as usize));
    }
    let mut flux = 0.0;
    for (e, &i) in graph.edges.iter().zip(current) {
        for (end, sign) in [(e[0], 1.0), (e[1], -1.0)] {
            if let Some((_, s)) = graph.vertices[end as usize].boundary {
                if s == side {
                    flux += sign * i;
                }
            }
        }
    }
    Ok(flux)
}

/// Per-side flux entry for reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SideFlux {
    pub side: u16,
    pub class: BoundaryClass,
    pub flux: f64,
}

/// Fluxes through every classed side, ascending by side index.
pub fn side_fluxes(graph: &GraphApprox, current: &[f64]) -> Result<Vec<SideFlux>> {
    let mut sides: Vec<(u16, BoundaryClass)> = graph
        .vertices
        .iter()
        .filter_map(|v| v.boundary)
        .map(|(class, side)| (side, class))
        .collect();
    sides.sort_unstable_by_key(|&(side, _)| side);
    sides.dedup();
    sides
        .into_iter()
        .map(|(side, class)| {
            Ok(SideFlux {
                side,
                class,
                flux: side_flux(graph, current, side)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ResistanceDump<'a> {
    kind: &'static str,
    #[serde(rename = "N")]
    n: u32,
    m: u32,
    #[serde(rename = "R")]
    resistance: f64,
    energy: f64,
    flux_per_side: &'a [SideFlux],
}

/// JSON report of a resistance computation, with per-side fluxes of the
/// unit-flux current.
pub fn resistance_json(graph: &GraphApprox, solution: &NetworkSolution) -> Result<String> {
    let current = unit_flux_current(graph, solution);
    let fluxes = side_fluxes(graph, &current)?;
    to_json_string(&ResistanceDump {
        kind: graph.kind.label(),
        n: graph.params.n(),
        m: graph.level,
        resistance: solution.resistance,
        energy: solution.energy,
        flux_per_side: &fluxes,
    })
}

/// CSV of the potential: `vertex,x,y,u`.
pub fn potential_csv(graph: &GraphApprox, potential: &[f64]) -> String {
    let rows = graph
        .vertices
        .iter()
        .zip(potential)
        .enumerate()
        .map(|(id, (v, &u))| {
            vec![
                id.to_string(),
                fmt_f64(v.position.re),
                fmt_f64(v.position.im),
                fmt_f64(u),
            ]
        })
        .collect::<Vec<_>>();
    csv_document(&["vertex", "x", "y", "u"], rows)
}

/// CSV of an edge flow: `i,j,I`.
pub fn current_csv(graph: &GraphApprox, current: &[f64]) -> String {
    let rows = graph
        .edges
        .iter()
        .zip(current)
        .map(|(e, &i)| vec![e[0].to_string(), e[1].to_string(), fmt_f64(i)])
        .collect::<Vec<_>>();
    csv_document(&["i", "j", "I"], rows)
}
