//! P1 finite elements on the pre-carpets.
//!
//! The level-n pre-carpet is the union of the level-n cell polygons. Each
//! cell is fan-triangulated from its center (4N triangles), and the fan is
//! red-refined `k` times, so the mesh has `4N·4^k·(4N)^n` triangles and is
//! conforming across shared cell sides. The mixed boundary-value problem
//! fixes `u = 0` on the Cantor boundary set A, `u = 1` on B, and leaves the
//! rest of the boundary free (natural condition); its Dirichlet energy `E`
//! gives the continuum resistance estimate `R = 1/E`, increasing in `k`.
//!
//! The module also carries the energy bookkeeping behind the resistance
//! sandwich: splitting the normalized potential's energy over the 4N
//! angular sectors, the cross-sector orthogonality integral, the per-corner
//! matching coefficients of the glued current, and the energies of the
//! glued current and glued potential together with their closed-form
//! bounds.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{CarpetError, Result};
use crate::geometry::{BoundaryClass, BoundaryIndex, CarpetParams, Point, DEFAULT_CELL_CAP};
use crate::locate::PointLocator;
use crate::report::{csv_document, fmt_f64, to_json_string};
use crate::solver::{solve_spd, SolveMethod, SolverOptions, SymmetricAssembler};

/// Node classification for the mixed boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeMarker {
    /// On the A part of the boundary: `u = 0`.
    #[serde(rename = "dirichlet-A")]
    DirichletA,
    /// On the B part of the boundary: `u = 1`.
    #[serde(rename = "dirichlet-B")]
    DirichletB,
    /// On the boundary but free (natural condition).
    #[serde(rename = "neumann-boundary")]
    NeumannBoundary,
    #[serde(rename = "interior")]
    Interior,
}

/// Conforming triangle mesh of a pre-carpet.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub params: CarpetParams,
    /// Pre-carpet level n.
    pub level: u32,
    /// Red refinements applied to the cell fans.
    pub refinement: u32,
    pub nodes: Vec<Point>,
    /// Node index triples; counterclockwise.
    pub triangles: Vec<[u32; 3]>,
    /// One marker per node.
    pub markers: Vec<NodeMarker>,
    /// Node identification tolerance used during construction.
    pub tol: f64,
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn marker_count(&self, marker: NodeMarker) -> usize {
        self.markers.iter().filter(|&&m| m == marker).count()
    }
}

/// Build the level-n mesh with `k` red refinements.
///
/// Cell fans are emitted in lexicographic cell order with corners sorted
/// counterclockwise around the cell center (the odd symmetrized cell maps
/// reverse orientation, so the raw corner cycle may arrive clockwise).
/// Nodes are identified geometrically with the level-n snap tolerance.
pub fn build_mesh(params: &CarpetParams, n: u32, k: u32) -> Result<Mesh> {
    let four_n = 4 * params.n() as u64;
    let predicted = four_n
        .checked_pow(n + 1)
        .and_then(|fans| fans.checked_mul(4u64.checked_pow(k)?))
        .filter(|&t| t <= DEFAULT_CELL_CAP as u64)
        .ok_or_else(|| {
            CarpetError::CapExceeded(format!(
                "mesh at level {n} with {k} refinements exceeds {DEFAULT_CELL_CAP} triangles"
            ))
        })?;

    let cells = params.cells(n)?;
    let tol = params.snap_tolerance(n);
    let mut locator = PointLocator::new(tol);
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(predicted as usize);

    let ring: Vec<Point> = (0..4 * params.n() as i64).map(|j| params.vertex(j)).collect();
    for cell in &cells {
        let center = cell.map.apply(Point::new(0.0, 0.0));
        let mut corners: Vec<Point> = ring.iter().map(|&c| cell.map.apply(c)).collect();
        corners.sort_by(|a, b| (a - center).arg().total_cmp(&(b - center).arg()));
        let center_id = locator.insert_or_get(center);
        let corner_ids: Vec<u32> = corners.iter().map(|&p| locator.insert_or_get(p)).collect();
        for i in 0..corner_ids.len() {
            let j = (i + 1) % corner_ids.len();
            triangles.push([center_id, corner_ids[i], corner_ids[j]]);
        }
    }

    for _ in 0..k {
        let mut refined = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let [a, b, c] = *t;
            let (pa, pb, pc) = (
                locator.points()[a as usize],
                locator.points()[b as usize],
                locator.points()[c as usize],
            );
            let mab = locator.insert_or_get((pa + pb) / 2.0);
            let mbc = locator.insert_or_get((pb + pc) / 2.0);
            let mca = locator.insert_or_get((pc + pa) / 2.0);
            refined.push([a, mab, mca]);
            refined.push([mab, b, mbc]);
            refined.push([mca, mbc, c]);
            refined.push([mab, mbc, mca]);
        }
        triangles = refined;
    }
    debug_assert_eq!(triangles.len() as u64, predicted);

    let nodes: Vec<Point> = locator.points().to_vec();

    // Boundary edges belong to exactly one triangle.
    let mut edge_count: HashMap<[u32; 2], u8> = HashMap::with_capacity(2 * triangles.len());
    for t in &triangles {
        for (x, y) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_count.entry([x.min(y), x.max(y)]).or_insert(0) += 1;
        }
    }
    let mut on_boundary = vec![false; nodes.len()];
    for (edge, &count) in &edge_count {
        debug_assert!(count <= 2, "edge shared by more than two triangles");
        if count == 1 {
            on_boundary[edge[0] as usize] = true;
            on_boundary[edge[1] as usize] = true;
        }
    }

    let index = BoundaryIndex::new(params, n, tol);
    let markers: Vec<NodeMarker> = nodes
        .iter()
        .zip(&on_boundary)
        .map(|(&p, &boundary)| match index.classify(p) {
            Some((_, BoundaryClass::A)) => {
                debug_assert!(boundary);
                NodeMarker::DirichletA
            }
            Some((_, BoundaryClass::B)) => {
                debug_assert!(boundary);
                NodeMarker::DirichletB
            }
            _ if boundary => NodeMarker::NeumannBoundary,
            _ => NodeMarker::Interior,
        })
        .collect();

    Ok(Mesh {
        params: params.clone(),
        level: n,
        refinement: k,
        nodes,
        triangles,
        markers,
        tol,
    })
}

/// Area and the constant P1 basis gradients of a triangle.
///
/// With `v0 = b − a`, `v1 = c − a`, `det = v0 × v1`:
/// `∇λ_a = (v0.y − v1.y, v1.x − v0.x)/det`, `∇λ_b = (v1.y, −v1.x)/det`,
/// `∇λ_c = (−v0.y, v0.x)/det`; the signs work for either orientation.
pub fn triangle_geometry(pa: Point, pb: Point, pc: Point) -> (f64, [[f64; 2]; 3]) {
    let v0 = pb - pa;
    let v1 = pc - pa;
    let det = v0.re * v1.im - v0.im * v1.re;
    debug_assert!(det != 0.0, "degenerate triangle");
    let area = det.abs() / 2.0;
    let ga = [(v0.im - v1.im) / det, (v1.re - v0.re) / det];
    let gb = [v1.im / det, -v1.re / det];
    let gc = [-v0.im / det, v0.re / det];
    (area, [ga, gb, gc])
}

/// A solved mixed boundary-value problem.
#[derive(Debug, Clone)]
pub struct FemSolution {
    /// Potential at every node (Dirichlet values included).
    pub potential: Vec<f64>,
    /// Dirichlet energy `∫ |∇u|²`.
    pub energy: f64,
    /// Continuum resistance estimate `1/energy`.
    pub resistance: f64,
    pub method: SolveMethod,
}

/// Solve `Δu = 0` with `u = 0` on A nodes, `u = 1` on B nodes, natural
/// boundary condition elsewhere.
pub fn solve_mixed_bvp(mesh: &Mesh, options: &SolverOptions) -> Result<FemSolution> {
    let fixed: Vec<Option<f64>> = mesh
        .markers
        .iter()
        .map(|m| match m {
            NodeMarker::DirichletA => Some(0.0),
            NodeMarker::DirichletB => Some(1.0),
            _ => None,
        })
        .collect();
    let have_a = fixed.iter().any(|f| *f == Some(0.0));
    let have_b = fixed.iter().any(|f| *f == Some(1.0));
    if !have_a || !have_b {
        return Err(CarpetError::InvalidBoundary(
            "mesh must carry Dirichlet nodes of both classes".into(),
        ));
    }

    let mut free_index = vec![usize::MAX; mesh.nodes.len()];
    let mut free = 0usize;
    for v in 0..mesh.nodes.len() {
        if fixed[v].is_none() {
            free_index[v] = free;
            free += 1;
        }
    }

    let mut assembler = SymmetricAssembler::new(free, 9 * mesh.triangles.len());
    let mut rhs = vec![0.0; free];
    for t in &mesh.triangles {
        let idx = [t[0] as usize, t[1] as usize, t[2] as usize];
        let (area, g) = triangle_geometry(
            mesh.nodes[idx[0]],
            mesh.nodes[idx[1]],
            mesh.nodes[idx[2]],
        );
        for i in 0..3 {
            if fixed[idx[i]].is_some() {
                continue;
            }
            let row = free_index[idx[i]];
            for j in 0..3 {
                let k_ij = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                match fixed[idx[j]] {
                    None => assembler.add(row, free_index[idx[j]], k_ij),
                    Some(value) => rhs[row] -= k_ij * value,
                }
            }
        }
    }

    let (solution, method) = solve_spd(&assembler.build(), &rhs, options)?;
    let mut potential = vec![0.0; mesh.nodes.len()];
    for v in 0..mesh.nodes.len() {
        potential[v] = match fixed[v] {
            Some(value) => value,
            None => solution[free_index[v]],
        };
    }
    let energy = dirichlet_energy(mesh, &potential);
    Ok(FemSolution {
        potential,
        energy,
        resistance: 1.0 / energy,
        method,
    })
}

/// `∫ |∇u|²` summed triangle by triangle in mesh order.
pub fn dirichlet_energy(mesh: &Mesh, potential: &[f64]) -> f64 {
    mesh.triangles
        .iter()
        .map(|t| {
            let idx = [t[0] as usize, t[1] as usize, t[2] as usize];
            let (area, g) = triangle_geometry(
                mesh.nodes[idx[0]],
                mesh.nodes[idx[1]],
                mesh.nodes[idx[2]],
            );
            let gx: f64 = (0..3).map(|i| potential[idx[i]] * g[i][0]).sum();
            let gy: f64 = (0..3).map(|i| potential[idx[i]] * g[i][1]).sum();
            area * (gx * gx + gy * gy)
        })
        .sum()
}

/// Rescale a {0, 1}-boundary potential to {−1, +1}: `2u − 1`. Quadruples
/// the energy, so the normalized potential has energy `4/R`.
pub fn normalize_pm1(potential: &[f64]) -> Vec<f64> {
    potential.iter().map(|&u| 2.0 * u - 1.0).collect()
}

/// One refinement step of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub refinement: u32,
    pub nodes: usize,
    pub energy: f64,
    pub resistance: f64,
    /// Resistance increment over the previous row.
    pub delta: Option<f64>,
}

/// Resistance estimates across refinements, plus an extrapolated limit.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementTable {
    pub level: u32,
    pub rows: Vec<RefinementRow>,
    /// Aitken Δ² extrapolation of the last three rows: an *estimate* of
    /// the refinement limit, not a converged or certified value.
    pub aitken_extrapolation: Option<f64>,
}

/// Solve the mixed problem for k = 0..=k_max and tabulate the estimates.
pub fn refinement_table(
    params: &CarpetParams,
    n: u32,
    k_max: u32,
    options: &SolverOptions,
) -> Result<RefinementTable> {
    let mut rows: Vec<RefinementRow> = Vec::new();
    for k in 0..=k_max {
        let mesh = build_mesh(params, n, k)?;
        let solution = solve_mixed_bvp(&mesh, options)?;
        let delta = rows.last().map(|prev| solution.resistance - prev.resistance);
        rows.push(RefinementRow {
            refinement: k,
            nodes: mesh.nodes.len(),
            energy: solution.energy,
            resistance: solution.resistance,
            delta,
        });
    }
    let aitken_extrapolation = if rows.len() >= 3 {
        let r = |i: usize| rows[rows.len() - 3 + i].resistance;
        let (d1, d2) = (r(1) - r(0), r(2) - r(1));
        let dd = d2 - d1;
        (dd.abs() > f64::EPSILON * r(2).abs()).then(|| r(2) - d2 * d2 / dd)
    } else {
        None
    };
    Ok(RefinementTable {
        level: n,
        rows,
        aitken_extrapolation,
    })
}

/// Geometric symmetries with a guaranteed action on every pre-carpet mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshSymmetry {
    /// Rotation by π/2N (one sector).
    Theta,
    /// Rotation by π/N (two sectors); exchanges A and B.
    Theta2,
    /// Complex conjugation.
    Conj,
}

/// The node permutation induced by a geometric symmetry of the mesh.
pub fn mesh_symmetry_permutation(mesh: &Mesh, sym: MeshSymmetry) -> Result<Vec<u32>> {
    let step = std::f64::consts::PI / (2.0 * mesh.params.n() as f64);
    let image = |p: Point| -> Point {
        match sym {
            MeshSymmetry::Theta => p * Point::from_polar(1.0, step),
            MeshSymmetry::Theta2 => p * Point::from_polar(1.0, 2.0 * step),
            MeshSymmetry::Conj => p.conj(),
        }
    };
    let locator = PointLocator::from_points(mesh.nodes.iter().copied(), mesh.tol);
    let mut perm = Vec::with_capacity(mesh.nodes.len());
    let mut hit = vec![false; mesh.nodes.len()];
    for (i, &p) in mesh.nodes.iter().enumerate() {
        let j = locator.find(image(p)).ok_or_else(|| {
            CarpetError::SymmetryViolation(format!(
                "mesh node {i} at ({:.6}, {:.6}) has no image node",
                p.re, p.im
            ))
        })?;
        if std::mem::replace(&mut hit[j as usize], true) {
            return Err(CarpetError::SymmetryViolation(format!(
                "two mesh nodes map onto node {j}"
            )));
        }
        perm.push(j);
    }
    Ok(perm)
}

/// Angular sector (out of 4N) containing direction `z`; sector j is the
/// half-open wedge of width π/2N around outer vertex j.
fn sector_of(params: &CarpetParams, z: Point) -> u32 {
    let four_n = 4 * params.n();
    let step = std::f64::consts::PI / (2.0 * params.n() as f64);
    let raw = ((z.arg() + step / 2.0) / step + 1e-13).floor() as i64;
    raw.rem_euclid(four_n as i64) as u32
}

/// Sector energy decomposition of the normalized potential.
#[derive(Debug, Clone, Serialize)]
pub struct SectorAnalysis {
    pub sector_count: u32,
    /// Energy of the ±1-normalized potential restricted to each sector.
    pub sector_energies: Vec<f64>,
    /// Sector-0 energy (the sector holding an A side).
    pub even_energy: f64,
    /// Sector-1 energy (the sector holding a free side).
    pub odd_energy: f64,
    /// `R²`-scaled sector energies: the energies of the unit-drop sector
    /// potentials the gluing construction pastes together.
    pub even_energy_scaled: f64,
    pub odd_energy_scaled: f64,
    /// Total-energy identity, two ways: `4/R` and `2N·(E₀ + E₁)`.
    pub identity_lhs: f64,
    pub identity_rhs: f64,
    /// Cross integral over sector 0 of the potential's gradient against
    /// the rotated pullback's gradient; zero in the limit.
    pub orthogonality: f64,
    /// max over nodes of |u(θ²z) + u(z)| for the normalized potential.
    pub theta2_residual: f64,
    /// max over nodes of |u(z̄) − u(z)| for the normalized potential.
    pub conj_residual: f64,
}

/// Split the normalized potential's energy over the 4N angular sectors and
/// verify the symmetry structure the gluing bounds rely on.
///
/// Triangles are assigned to the sector containing their centroid; a
/// triangle whose (slightly inward-nudged) vertices disagree with the
/// centroid straddles a sector ray, which the fan construction never
/// produces — it is reported as an error.
pub fn sector_analysis(mesh: &Mesh, solution: &FemSolution) -> Result<SectorAnalysis> {
    let params = &mesh.params;
    let four_n = 4 * params.n();
    let u = normalize_pm1(&solution.potential);

    let mut areas = Vec::with_capacity(mesh.triangles.len());
    let mut grads: Vec<[f64; 2]> = Vec::with_capacity(mesh.triangles.len());
    let mut sectors = Vec::with_capacity(mesh.triangles.len());
    for (t_index, t) in mesh.triangles.iter().enumerate() {
        let idx = [t[0] as usize, t[1] as usize, t[2] as usize];
        let (pa, pb, pc) = (mesh.nodes[idx[0]], mesh.nodes[idx[1]], mesh.nodes[idx[2]]);
        let (area, g) = triangle_geometry(pa, pb, pc);
        let gx: f64 = (0..3).map(|i| u[idx[i]] * g[i][0]).sum();
        let gy: f64 = (0..3).map(|i| u[idx[i]] * g[i][1]).sum();
        let centroid = (pa + pb + pc) / 3.0;
        let sector = sector_of(params, centroid);
        for p in [pa, pb, pc] {
            let nudged = p + (centroid - p) * 1e-9;
            if sector_of(params, nudged) != sector {
                return Err(CarpetError::StraddlingTriangle(t_index));
            }
        }
        areas.push(area);
        grads.push([gx, gy]);
        sectors.push(sector);
    }

    let mut sector_energies = vec![0.0; four_n as usize];
    for i in 0..mesh.triangles.len() {
        sector_energies[sectors[i] as usize] +=
            areas[i] * (grads[i][0] * grads[i][0] + grads[i][1] * grads[i][1]);
    }

    let theta = mesh_symmetry_permutation(mesh, MeshSymmetry::Theta)?;
    let mut triangle_of: HashMap<[u32; 3], u32> = HashMap::with_capacity(mesh.triangles.len());
    for (i, t) in mesh.triangles.iter().enumerate() {
        let mut key = *t;
        key.sort_unstable();
        triangle_of.insert(key, i as u32);
    }

    // ∇(u∘θ)(z) = Rot(−π/2N)·∇u(θz); integrate ∇u·∇(u∘θ) over sector 0.
    let step = std::f64::consts::PI / (2.0 * params.n() as f64);
    let (cos_b, sin_b) = ((-step).cos(), (-step).sin());
    let mut orthogonality = 0.0;
    for (i, t) in mesh.triangles.iter().enumerate() {
        if sectors[i] != 0 {
            continue;
        }
        let mut key = [
            theta[t[0] as usize],
            theta[t[1] as usize],
            theta[t[2] as usize],
        ];
        key.sort_unstable();
        let j = *triangle_of.get(&key).ok_or_else(|| {
            CarpetError::SymmetryViolation(
                "rotated triangle is not a mesh triangle".into(),
            )
        })? as usize;
        let g = grads[j];
        let rotated = [cos_b * g[0] - sin_b * g[1], sin_b * g[0] + cos_b * g[1]];
        orthogonality += areas[i] * (grads[i][0] * rotated[0] + grads[i][1] * rotated[1]);
    }

    let conj = mesh_symmetry_permutation(mesh, MeshSymmetry::Conj)?;
    let mut theta2_residual = 0.0f64;
    let mut conj_residual = 0.0f64;
    for i in 0..mesh.nodes.len() {
        let theta2_i = theta[theta[i] as usize] as usize;
        theta2_residual = theta2_residual.max((u[theta2_i] + u[i]).abs());
        conj_residual = conj_residual.max((u[conj[i] as usize] - u[i]).abs());
    }

    let r = solution.resistance;
    let even_energy = sector_energies[0];
    let odd_energy = sector_energies[1];
    Ok(SectorAnalysis {
        sector_count: four_n,
        even_energy,
        odd_energy,
        even_energy_scaled: r * r * even_energy,
        odd_energy_scaled: r * r * odd_energy,
        identity_lhs: 4.0 / r,
        identity_rhs: 2.0 * params.n() as f64 * (even_energy + odd_energy),
        orthogonality,
        theta2_residual,
        conj_residual,
        sector_energies,
    })
}

/// Per-corner matching coefficients of the glued current.
///
/// `fluxes = (I₀, I_N, I_{3N−1})` are the currents assigned to the three
/// distinguished sides of a cell; they must sum to zero (current
/// conservation). The returned vector has one coefficient per outer
/// vertex j ∈ {0, …, 4N−1}:
///
/// | j                | β_j               |
/// |------------------|-------------------|
/// | 0                | I_N − I_{3N−1}    |
/// | 1 … N−1          | 2(I_N − I₀)       |
/// | N                | I_{3N−1} − I₀     |
/// | N+1 … 3N−2       | 2(I_{3N−1} − I_N) |
/// | 3N−1             | I₀ − I_N          |
/// | 3N … 4N−1        | 2(I₀ − I_{3N−1})  |
pub fn beta_coefficients(n: u32, fluxes: (f64, f64, f64)) -> Result<Vec<f64>> {
    let (i_first, i_mid, i_last) = fluxes;
    let scale = i_first.abs().max(i_mid.abs()).max(i_last.abs()).max(1.0);
    let sum = i_first + i_mid + i_last;
    if sum.abs() > 1e-12 * scale {
        return Err(CarpetError::FluxSumNonzero(sum));
    }
    let n = n as usize;
    let beta = (0..4 * n)
        .map(|j| {
            if j == 0 {
                i_mid - i_last
            } else if j < n {
                2.0 * (i_mid - i_first)
            } else if j == n {
                i_last - i_first
            } else if j < 3 * n - 1 {
                2.0 * (i_last - i_mid)
            } else if j == 3 * n - 1 {
                i_first - i_mid
            } else {
                2.0 * (i_first - i_last)
            }
        })
        .collect();
    Ok(beta)
}

/// Closed form for `Σ_j β_j²`, exact for zero-sum fluxes:
/// `(4N−3)(I_N−I₀)² + (8N−7)(I_{3N−1}−I_N)² + (4N+1)(I₀−I_{3N−1})²`.
pub fn beta_sum_squares(n: u32, fluxes: (f64, f64, f64)) -> f64 {
    let (i_first, i_mid, i_last) = fluxes;
    let nf = f64::from(n);
    (4.0 * nf - 3.0) * (i_mid - i_first).powi(2)
        + (8.0 * nf - 7.0) * (i_last - i_mid).powi(2)
        + (4.0 * nf + 1.0) * (i_first - i_last).powi(2)
}

/// Flux-quadratic upper bound for `Σβ²`:
/// `(22N−18)I₀² + (22N−19)I_N² + (22N−16)I_{3N−1}²`. Strict for nonzero
/// zero-sum fluxes when N ≥ 2.
pub fn beta_sum_squares_bound(n: u32, fluxes: (f64, f64, f64)) -> f64 {
    let (i_first, i_mid, i_last) = fluxes;
    let nf = f64::from(n);
    (22.0 * nf - 18.0) * i_first * i_first
        + (22.0 * nf - 19.0) * i_mid * i_mid
        + (22.0 * nf - 16.0) * i_last * i_last
}

/// Energy of the glued cross-cell current, with its two bounds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GluedCurrentEnergy {
    /// `(N²/4)·E_V·ΣI² + (N²/36)·E_W·Σβ²` with the R²-scaled sector
    /// energies.
    pub energy: f64,
    /// After bounding Σβ² by the flux quadratic:
    /// `(N²/4)·E_V·ΣI² + (N²/18)(11N−8)·E_W·ΣI²`.
    pub flux_bound: f64,
    /// Final resistance form: `(11/9)·N²·R·ΣI²`.
    pub resistance_bound: f64,
}

/// Energy bookkeeping for the current glued from three side fluxes.
pub fn glued_current_energy(
    n: u32,
    sectors: &SectorAnalysis,
    resistance: f64,
    fluxes: (f64, f64, f64),
) -> Result<GluedCurrentEnergy> {
    let beta = beta_coefficients(n, fluxes)?;
    let beta_sq: f64 = beta.iter().map(|b| b * b).sum();
    let flux_sq = fluxes.0 * fluxes.0 + fluxes.1 * fluxes.1 + fluxes.2 * fluxes.2;
    let nf = f64::from(n);
    let n2 = nf * nf;
    let e_v = sectors.even_energy_scaled;
    let e_w = sectors.odd_energy_scaled;
    Ok(GluedCurrentEnergy {
        energy: n2 / 4.0 * e_v * flux_sq + n2 / 36.0 * e_w * beta_sq,
        flux_bound: n2 / 4.0 * e_v * flux_sq + n2 / 18.0 * (11.0 * nf - 8.0) * e_w * flux_sq,
        resistance_bound: 11.0 / 9.0 * n2 * resistance * flux_sq,
    })
}

/// Energy of the glued corner potential, with its bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GluedPotentialEnergy {
    /// `¼E_v·Σ(z_{j+1}+z_j)² + ¼E_w·Σ(z_{j+1}−z_j)²` (cyclic sums).
    pub energy: f64,
    /// `(E_v + E_w)·Σz²`, i.e. `(2/N)·R⁻¹·Σz²` by the energy identity.
    pub bound: f64,
}

/// Energy bookkeeping for the potential glued from per-corner values.
///
/// `corner_values[j]` is the value at outer vertex j; only the six corners
/// the base cell gluing touches — `{0, 1, N, N+1, 3N−1, 3N}` — may carry a
/// nonzero value.
pub fn glued_potential_energy(
    n: u32,
    sectors: &SectorAnalysis,
    corner_values: &[f64],
) -> Result<GluedPotentialEnergy> {
    let four_n = 4 * n as usize;
    if corner_values.len() != four_n {
        return Err(CarpetError::InvalidBoundary(format!(
            "expected {four_n} corner values, got {}",
            corner_values.len()
        )));
    }
    let n = n as usize;
    let glued = [0, 1, n, n + 1, 3 * n - 1, 3 * n];
    for (j, &z) in corner_values.iter().enumerate() {
        if z != 0.0 && !glued.contains(&j) {
            return Err(CarpetError::InvalidBoundary(format!(
                "corner {j} is not glued and must carry value 0, got {z}"
            )));
        }
    }
    let mut sum_plus = 0.0;
    let mut sum_minus = 0.0;
    let mut sum_sq = 0.0;
    for j in 0..four_n {
        let z_j = corner_values[j];
        let z_next = corner_values[(j + 1) % four_n];
        sum_plus += (z_next + z_j) * (z_next + z_j);
        sum_minus += (z_next - z_j) * (z_next - z_j);
        sum_sq += z_j * z_j;
    }
    Ok(GluedPotentialEnergy {
        energy: 0.25 * sectors.even_energy * sum_plus + 0.25 * sectors.odd_energy * sum_minus,
        bound: (sectors.even_energy + sectors.odd_energy) * sum_sq,
    })
}

#[derive(Serialize)]
struct NodeDump {
    x: f64,
    y: f64,
    marker: NodeMarker,
}

#[derive(Serialize)]
struct MeshDump<'a> {
    #[serde(rename = "N")]
    n: u32,
    level: u32,
    refinement: u32,
    nodes: Vec<NodeDump>,
    triangles: &'a [[u32; 3]],
}

/// JSON dump of a mesh (17-significant-digit coordinates).
pub fn mesh_json(mesh: &Mesh) -> Result<String> {
    to_json_string(&MeshDump {
        n: mesh.params.n(),
        level: mesh.level,
        refinement: mesh.refinement,
        nodes: mesh
            .nodes
            .iter()
            .zip(&mesh.markers)
            .map(|(p, &marker)| NodeDump {
                x: p.re,
                y: p.im,
                marker,
            })
            .collect(),
        triangles: &mesh.triangles,
    })
}

/// CSV of a nodal field: `node,x,y,u`.
pub fn solution_csv(mesh: &Mesh, potential: &[f64]) -> String {
    let rows: Vec<Vec<String>> = mesh
        .nodes
        .iter()
        .zip(potential)
        .enumerate()
        .map(|(id, (p, &u))| {
            vec![id.to_string(), fmt_f64(p.re), fmt_f64(p.im), fmt_f64(u)]
        })
        .collect();
    csv_document(&["node", "x", "y", "u"], rows)
}

/// CSV of a refinement study: `k,nodes,energy,R_est,delta`.
pub fn convergence_csv(table: &RefinementTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|row| {
            vec![
                row.refinement.to_string(),
                row.nodes.to_string(),
                fmt_f64(row.energy),
                fmt_f64(row.resistance),
                row.delta.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    csv_document(&["k", "nodes", "energy", "R_est", "delta"], rows)
}
