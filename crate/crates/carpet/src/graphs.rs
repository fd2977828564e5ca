//! Graph approximations of the carpet: the pendant-midpoint graphs `G_m`
//! and the corner graphs `D_m`.
//!
//! Both arise from one base star mapped through every level-m cell map and
//! then glued geometrically:
//!
//! * kind **G**: base star joins the cell center to the midpoints of the
//!   three sides `L_0`, `L_N`, `L_{3N-1}`; midpoints on shared cell sides
//!   merge, midpoints on the outer A/B sides become the boundary vertices.
//! * kind **D**: base star joins the center to the six corners
//!   `C_0, C_1, C_N, C_{N+1}, C_{3N-1}, C_{3N}`; corner copies merge along
//!   shared sides. Every G edge corresponds to two D edges, which is what
//!   drives the exact doubling `R_m^G = 2 R_m^D`.
//!
//! Vertex identity is geometric: images within the scale-relative snap
//! tolerance `τ_m` are one vertex. Merging only ever affects vertices (edge
//! multiplicity never collapses), so edge counts are exactly `3·(4N)^m`
//! (G) and `6·(4N)^m` (D).

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::error::{CarpetError, Result};
use crate::geometry::{
    BoundaryClass, BoundaryIndex, CarpetParams, Point, SvgOptions, DEFAULT_SNAP_MULTIPLIER,
};

/// Which of the two graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GraphKind {
    /// Side-midpoint graphs (current approximation).
    G,
    /// Corner graphs (potential approximation).
    D,
}

impl GraphKind {
    /// Short label used in reports and cache keys.
    pub fn label(self) -> &'static str {
        match self {
            GraphKind::G => "G",
            GraphKind::D => "D",
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "G" | "g" => Ok(GraphKind::G),
            "D" | "d" => Ok(GraphKind::D),
            other => Err(format!("unknown graph kind {other:?} (expected G or D)")),
        }
    }
}

/// What a vertex is a copy of in the base star.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexRole {
    CellCenter,
    SideMidpoint,
    Corner,
}

/// One graph vertex: position, base role, and (for m ≥ 1) which outer A/B
/// side it sits on, if any.
#[derive(Debug, Clone)]
pub struct GraphVertex {
    pub position: Point,
    pub role: VertexRole,
    /// `(class, outer side index)` when the vertex lies on A_m ∪ B_m.
    pub boundary: Option<(BoundaryClass, u16)>,
}

/// A built `G_m` or `D_m`: deduplicated vertices, unit-conductance edges,
/// and the tagged boundary sets.
#[derive(Debug, Clone)]
pub struct GraphApprox {
    pub kind: GraphKind,
    /// Subdivision level m.
    pub level: u32,
    pub params: CarpetParams,
    pub vertices: Vec<GraphVertex>,
    /// Undirected edges as index pairs with i < j, sorted, no duplicates.
    /// All conductances are 1.
    pub edges: Vec<[u32; 2]>,
    /// Vertex ids on the A sides, ascending.
    pub boundary_a: Vec<u32>,
    /// Vertex ids on the B sides, ascending.
    pub boundary_b: Vec<u32>,
    /// Snap tolerance the graph was built with.
    pub snap_tol: f64,
}

/// A vertex permutation realizing a geometric symmetry of the graph.
#[derive(Debug, Clone)]
pub struct SymmetryPermutation {
    /// Image vertex of each vertex.
    pub map: Vec<u32>,
    /// Whether the symmetry exchanges the A and B boundary sets.
    pub swaps_ab: bool,
}

/// The symmetries with a guaranteed action on every `G_m`/`D_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSymmetry {
    /// The rotation θ² (by π/N); exchanges A and B.
    Theta2,
    /// Complex conjugation; preserves A and B.
    Conj,
}

/// Exact structural counts for a built graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphCounts {
    pub vertices: u64,
    pub edges: u64,
    /// Size of each of the two boundary classes (m ≥ 1).
    pub boundary_per_class: u64,
}

/// Number of shared (interior) cell sides at level m.
///
/// One subdivision step turns each cell into a ring of 4N children, which
/// creates 4N sibling-shared sides per cell, while every previously shared
/// side survives as the 2 outermost child sub-sides on it. Hence
/// `s(m) = 2·s(m-1) + 4N·(4N)^{m-1}`, i.e. `s(m) = Σ_{ℓ=1..m} (4N)^ℓ·2^{m-ℓ}`.
pub fn shared_side_count(n: u32, m: u32) -> u64 {
    let base = 4 * n as u64;
    (1..=m).map(|l| base.pow(l) * (1 << (m - l) as u64)).sum()
}

/// Closed-form vertex/edge/boundary counts.
///
/// Centers never merge and each shared side merges one midpoint pair (kind
/// G) or two corner pairs (kind D):
/// `v_G = 4·(4N)^m − s(m)`, `v_D = 7·(4N)^m − 2·s(m)`.
/// Edges never merge: `e_G = 3·(4N)^m`, `e_D = 6·(4N)^m`. Each A/B side
/// carries `2^m` carpet segments, contributing one midpoint (G) or two
/// corner (D) boundary vertices apiece.
pub fn expected_counts(n: u32, m: u32, kind: GraphKind) -> GraphCounts {
    let cells = (4 * n as u64).pow(m);
    let shared = shared_side_count(n, m);
    let per_side = if m == 0 { 0 } else { (n as u64) << m };
    match kind {
        GraphKind::G => GraphCounts {
            vertices: 4 * cells - shared,
            edges: 3 * cells,
            boundary_per_class: per_side,
        },
        GraphKind::D => GraphCounts {
            vertices: 7 * cells - 2 * shared,
            edges: 6 * cells,
            boundary_per_class: 2 * per_side,
        },
    }
}

/// Geometric point merging: transitive closure of "within `tol`".
///
/// Returns the canonical id of every input point plus one representative
/// position per cluster (the lexicographically smallest member). Clusters
/// are numbered in order of their first member. A cluster wider than
/// `10·tol` means the tolerance no longer separates distinct vertices and
/// is reported as an error rather than silently merged.
pub fn snap_dedup(points: &[Point], tol: f64) -> Result<(Vec<u32>, Vec<Point>)> {
    assert!(tol > 0.0, "snap tolerance must be positive");
    let cell = 2.0 * tol;
    let key = |p: Point| ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);

    let mut parent: Vec<u32> = (0..points.len() as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }

    let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        let (gx, gy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(gx + dx, gy + dy)) {
                    for &j in bucket {
                        if (points[j as usize] - p).norm() <= tol {
                            let (ri, rj) = (find(&mut parent, i as u32), find(&mut parent, j));
                            if ri != rj {
                                parent[ri.max(rj) as usize] = ri.min(rj);
                            }
                        }
                    }
                }
            }
        }
        grid.entry((gx, gy)).or_default().push(i as u32);
    }

    // Number clusters by first occurrence; pick lexicographically smallest
    // member as representative; check cluster diameters.
    let mut cluster_of_root: HashMap<u32, u32> = HashMap::new();
    let mut ids = Vec::with_capacity(points.len());
    let mut members: Vec<Vec<u32>> = Vec::new();
    for i in 0..points.len() as u32 {
        let root = find(&mut parent, i);
        let cluster = *cluster_of_root.entry(root).or_insert_with(|| {
            members.push(Vec::new());
            (members.len() - 1) as u32
        });
        members[cluster as usize].push(i);
        ids.push(cluster);
    }
    let mut reps = Vec::with_capacity(members.len());
    for group in &members {
        let mut rep = points[group[0] as usize];
        for &i in group {
            let p = points[i as usize];
            if (p.re, p.im) < (rep.re, rep.im) {
                rep = p;
            }
        }
        for &i in group {
            for &j in group {
                let d = (points[i as usize] - points[j as usize]).norm();
                if d > 10.0 * tol {
                    return Err(CarpetError::ToleranceFailure { diameter: d, tol });
                }
            }
        }
        reps.push(rep);
    }
    Ok((ids, reps))
}

fn base_star(params: &CarpetParams, kind: GraphKind) -> (Vec<Point>, Vec<VertexRole>) {
    let n = params.n() as i64;
    let origin = Point::new(0.0, 0.0);
    match kind {
        GraphKind::G => {
            let mid = |j: i64| {
                let (a, b) = params.side(j);
                (a + b) / 2.0
            };
            (
                vec![origin, mid(0), mid(n), mid(3 * n - 1)],
                vec![
                    VertexRole::CellCenter,
                    VertexRole::SideMidpoint,
                    VertexRole::SideMidpoint,
                    VertexRole::SideMidpoint,
                ],
            )
        }
        GraphKind::D => {
            let corners = [0, 1, n, n + 1, 3 * n - 1, 3 * n];
            let mut pts = vec![origin];
            pts.extend(corners.iter().map(|&j| params.vertex(j)));
            let mut roles = vec![VertexRole::CellCenter];
            roles.extend(std::iter::repeat(VertexRole::Corner).take(6));
            (pts, roles)
        }
    }
}

/// Build `G_m` or `D_m` with the default snap tolerance `τ_m`.
pub fn build_graph(params: &CarpetParams, m: u32, kind: GraphKind) -> Result<GraphApprox> {
    build_graph_with_tolerance(params, m, kind, DEFAULT_SNAP_MULTIPLIER)
}

/// Build `G_m` or `D_m`, merging vertices within `snap_multiplier · r^m`.
///
/// Level 0 is constructed without boundary tags (the A/B sets live on the
/// outer sides only for m ≥ 1); resistance queries on it need explicit
/// terminal sets.
pub fn build_graph_with_tolerance(
    params: &CarpetParams,
    m: u32,
    kind: GraphKind,
    snap_multiplier: f64,
) -> Result<GraphApprox> {
    let cells = params.cells(m)?;
    let (base_pts, base_roles) = base_star(params, kind);
    let tol = snap_multiplier * params.r().powi(m as i32);

    let mut positions = Vec::with_capacity(cells.len() * base_pts.len());
    for cell in &cells {
        for &p in &base_pts {
            positions.push(cell.map.apply(p));
        }
    }
    let (ids, reps) = snap_dedup(&positions, tol)?;

    let stride = base_pts.len();
    let mut edges: Vec<[u32; 2]> = Vec::with_capacity(cells.len() * (stride - 1));
    for cell_index in 0..cells.len() {
        let off = cell_index * stride;
        let center = ids[off];
        for leaf in 1..stride {
            let other = ids[off + leaf];
            debug_assert_ne!(center, other, "center merged with a leaf");
            edges.push([center.min(other), center.max(other)]);
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let mut roles = vec![VertexRole::CellCenter; reps.len()];
    let mut seen = vec![false; reps.len()];
    for (i, &id) in ids.iter().enumerate() {
        if !seen[id as usize] {
            seen[id as usize] = true;
            roles[id as usize] = base_roles[i % stride];
        }
    }

    let mut vertices: Vec<GraphVertex> = reps
        .iter()
        .zip(&roles)
        .map(|(&position, &role)| GraphVertex {
            position,
            role,
            boundary: None,
        })
        .collect();

    let mut boundary_a = Vec::new();
    let mut boundary_b = Vec::new();
    if m >= 1 {
        let index = BoundaryIndex::new(params, m, tol);
        for (i, v) in vertices.iter_mut().enumerate() {
            if let Some((side, class)) = index.classify(v.position) {
                v.boundary = Some((class, side));
                match class {
                    BoundaryClass::A => boundary_a.push(i as u32),
                    BoundaryClass::B => boundary_b.push(i as u32),
                    BoundaryClass::Other => unreachable!(),
                }
            }
        }
    }

    Ok(GraphApprox {
        kind,
        level: m,
        params: params.clone(),
        vertices,
        edges,
        boundary_a,
        boundary_b,
        snap_tol: tol,
    })
}

impl GraphApprox {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertex degrees.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.vertices.len()];
        for e in &self.edges {
            deg[e[0] as usize] += 1;
            deg[e[1] as usize] += 1;
        }
        deg
    }

    /// The vertex permutation induced by a geometric symmetry.
    ///
    /// Fails if the symmetry does not map the vertex set, the edge set, or
    /// the boundary sets as required — any of which would mean the graph was
    /// built wrong.
    pub fn symmetry_permutation(&self, sym: GraphSymmetry) -> Result<SymmetryPermutation> {
        let image = |p: Point| -> Point {
            match sym {
                GraphSymmetry::Theta2 => {
                    let rot = Point::from_polar(1.0, std::f64::consts::PI / self.params.n() as f64);
                    p * rot
                }
                GraphSymmetry::Conj => p.conj(),
            }
        };

        let locator = crate::locate::PointLocator::from_points(
            self.vertices.iter().map(|v| v.position),
            self.snap_tol,
        );
        let mut map = Vec::with_capacity(self.vertices.len());
        let mut hit = vec![false; self.vertices.len()];
        for (i, v) in self.vertices.iter().enumerate() {
            let target = image(v.position);
            let j = locator.find(target).ok_or_else(|| {
                CarpetError::SymmetryViolation(format!(
                    "vertex {i} at ({:.6}, {:.6}) has no image vertex",
                    v.position.re, v.position.im
                ))
            })?;
            if std::mem::replace(&mut hit[j as usize], true) {
                return Err(CarpetError::SymmetryViolation(format!(
                    "two vertices map onto vertex {j}"
                )));
            }
            map.push(j);
        }

        let edge_set: HashSet<[u32; 2]> = self.edges.iter().copied().collect();
        for e in &self.edges {
            let (a, b) = (map[e[0] as usize], map[e[1] as usize]);
            if !edge_set.contains(&[a.min(b), a.max(b)]) {
                return Err(CarpetError::SymmetryViolation(format!(
                    "edge ({}, {}) not preserved",
                    e[0], e[1]
                )));
            }
        }

        let swaps_ab = matches!(sym, GraphSymmetry::Theta2);
        let a_set: HashSet<u32> = self.boundary_a.iter().copied().collect();
        let b_set: HashSet<u32> = self.boundary_b.iter().copied().collect();
        let (want_a, want_b): (&HashSet<u32>, &HashSet<u32>) = if swaps_ab {
            (&b_set, &a_set)
        } else {
            (&a_set, &b_set)
        };
        for &a in &self.boundary_a {
            if !want_a.contains(&map[a as usize]) {
                return Err(CarpetError::SymmetryViolation(format!(
                    "boundary vertex {a} maps off its expected class"
                )));
            }
        }
        for &b in &self.boundary_b {
            if !want_b.contains(&map[b as usize]) {
                return Err(CarpetError::SymmetryViolation(format!(
                    "boundary vertex {b} maps off its expected class"
                )));
            }
        }

        Ok(SymmetryPermutation { map, swaps_ab })
    }
}

impl SymmetryPermutation {
    /// Compose with another permutation (apply `self` first, then `other`).
    pub fn then(&self, other: &SymmetryPermutation) -> SymmetryPermutation {
        SymmetryPermutation {
            map: self
                .map
                .iter()
                .map(|&i| other.map[i as usize])
                .collect(),
            swaps_ab: self.swaps_ab != other.swaps_ab,
        }
    }

    /// Whether this is the identity permutation.
    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i as u32 == j)
    }
}

/// Exact structural summary of a graph.
#[derive(Debug, Clone, Serialize)]
pub struct GraphStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    /// degree → number of vertices with that degree.
    pub degree_histogram: BTreeMap<u32, usize>,
    pub component_count: usize,
    pub boundary_a_size: usize,
    pub boundary_b_size: usize,
}

/// Compute counts, degree histogram, and connectivity.
pub fn graph_stats(graph: &GraphApprox) -> GraphStats {
    let mut histogram = BTreeMap::new();
    for d in graph.degrees() {
        *histogram.entry(d).or_insert(0) += 1;
    }

    let mut parent: Vec<u32> = (0..graph.vertices.len() as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }
    for e in &graph.edges {
        let (a, b) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
        if a != b {
            parent[a.max(b) as usize] = a.min(b);
        }
    }
    let components = (0..graph.vertices.len() as u32)
        .filter(|&i| find(&mut parent, i) == i)
        .count();

    GraphStats {
        vertex_count: graph.vertices.len(),
        edge_count: graph.edges.len(),
        degree_histogram: histogram,
        component_count: components,
        boundary_a_size: graph.boundary_a.len(),
        boundary_b_size: graph.boundary_b.len(),
    }
}

#[derive(Serialize)]
struct VertexDump {
    x: f64,
    y: f64,
    role: VertexRole,
}

#[derive(Serialize)]
struct GraphDump<'a> {
    kind: &'static str,
    level: u32,
    n: u32,
    vertices: Vec<VertexDump>,
    edges: &'a [[u32; 2]],
    #[serde(rename = "A")]
    a: &'a [u32],
    #[serde(rename = "B")]
    b: &'a [u32],
}

/// JSON dump of a graph (17-significant-digit coordinates).
pub fn graph_json(graph: &GraphApprox) -> Result<String> {
    crate::report::to_json_string(&GraphDump {
        kind: graph.kind.label(),
        level: graph.level,
        n: graph.params.n(),
        vertices: graph
            .vertices
            .iter()
            .map(|v| VertexDump {
                x: v.position.re,
                y: v.position.im,
                role: v.role,
            })
            .collect(),
        edges: &graph.edges,
        a: &graph.boundary_a,
        b: &graph.boundary_b,
    })
}

/// Deterministic SVG of the graph drawn over its carpet.
pub fn graph_svg(graph: &GraphApprox) -> Result<String> {
    let opts = SvgOptions::default();
    let carpet = crate::geometry::emit_carpet_svg(&graph.params, graph.level, &opts)?;
    let mut svg = carpet
        .strip_suffix("</g>\n</svg>\n")
        .expect("carpet svg layout")
        .to_string();
    for e in &graph.edges {
        let p = graph.vertices[e[0] as usize].position;
        let q = graph.vertices[e[1] as usize].position;
        svg.push_str(&format!(
            "<line x1=\"{:.8}\" y1=\"{:.8}\" x2=\"{:.8}\" y2=\"{:.8}\" stroke=\"#208020\" stroke-width=\"0.006\"/>\n",
            p.re, p.im, q.re, q.im
        ));
    }
    for v in &graph.vertices {
        let color = match v.boundary {
            Some((BoundaryClass::A, _)) => "#c02020",
            Some((BoundaryClass::B, _)) => "#2020c0",
            _ => "#000000",
        };
        svg.push_str(&format!(
            "<circle cx=\"{:.8}\" cy=\"{:.8}\" r=\"0.012\" fill=\"{color}\"/>\n",
            v.position.re, v.position.im
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32) -> CarpetParams {
        CarpetParams::new(n).unwrap()
    }

    #[test]
    fn snap_dedup_merges_copies() {
        let p = Point::new(0.25, -0.5);
        let q = p + Point::new(1e-9, 0.0);
        let far = Point::new(0.25 + 1e-4, -0.5);
        let (ids, reps) = snap_dedup(&[p, q, far], 1e-6).unwrap();
        assert_eq!(ids[0], ids[1]);
        assert_ne!(ids[0], ids[2]);
        assert_eq!(reps.len(), 2);
        // representative is the lexicographically smallest member
        assert_eq!(reps[0], p);
    }

    #[test]
    fn snap_dedup_flags_long_merge_chains() {
        let tol = 1e-3;
        let chain: Vec<Point> = (0..15)
            .map(|i| Point::new(0.9 * tol * i as f64, 0.0))
            .collect();
        match snap_dedup(&chain, tol) {
            Err(CarpetError::ToleranceFailure { diameter, .. }) => {
                assert!(diameter > 10.0 * tol);
            }
            other => panic!("expected tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn base_graphs_are_stars() {
        let p = params(2);
        let g0 = build_graph(&p, 0, GraphKind::G).unwrap();
        assert_eq!((g0.vertex_count(), g0.edge_count()), (4, 3));
        assert!(g0.boundary_a.is_empty() && g0.boundary_b.is_empty());
        let d0 = build_graph(&p, 0, GraphKind::D).unwrap();
        assert_eq!((d0.vertex_count(), d0.edge_count()), (7, 6));
        let d0_n5 = build_graph(&params(5), 0, GraphKind::D).unwrap();
        assert_eq!((d0_n5.vertex_count(), d0_n5.edge_count()), (7, 6));
    }

    #[test]
    fn level_one_counts() {
        let p = params(2);
        let g1 = build_graph(&p, 1, GraphKind::G).unwrap();
        assert_eq!(g1.vertex_count(), 24);
        assert_eq!(g1.edge_count(), 24);
        assert_eq!(g1.boundary_a.len(), 4);
        assert_eq!(g1.boundary_b.len(), 4);
        let d1 = build_graph(&p, 1, GraphKind::D).unwrap();
        assert_eq!(d1.vertex_count(), 40);
        assert_eq!(d1.edge_count(), 48);
        assert_eq!(d1.boundary_a.len(), 8);
    }

    #[test]
    fn closed_form_counts_match_construction() {
        for n in [2u32, 3] {
            let p = params(n);
            for m in 0..=2 {
                for kind in [GraphKind::G, GraphKind::D] {
                    let g = build_graph(&p, m, kind).unwrap();
                    let want = expected_counts(n, m, kind);
                    assert_eq!(g.vertex_count() as u64, want.vertices, "N={n} m={m} {kind:?}");
                    assert_eq!(g.edge_count() as u64, want.edges);
                    if m >= 1 {
                        assert_eq!(g.boundary_a.len() as u64, want.boundary_per_class);
                        assert_eq!(g.boundary_b.len() as u64, want.boundary_per_class);
                    }
                }
            }
        }
    }

    #[test]
    fn degree_structure() {
        let p = params(2);
        let g2 = build_graph(&p, 2, GraphKind::G).unwrap();
        let stats = graph_stats(&g2);
        assert_eq!(stats.component_count, 1);
        // centers all have degree 3
        assert_eq!(stats.degree_histogram[&3], 64);
        // shared midpoints have degree 2
        assert_eq!(stats.degree_histogram[&2] as u64, shared_side_count(2, 2));
        let d2 = build_graph(&p, 2, GraphKind::D).unwrap();
        let dstats = graph_stats(&d2);
        assert_eq!(dstats.degree_histogram[&6], 64);
        assert_eq!(dstats.component_count, 1);
    }

    #[test]
    fn boundary_vertices_sit_on_segments() {
        let p = params(3);
        let g = build_graph(&p, 2, GraphKind::G).unwrap();
        let index = BoundaryIndex::new(&p, 2, g.snap_tol);
        for &a in &g.boundary_a {
            let v = &g.vertices[a as usize];
            assert_eq!(index.classify(v.position).map(|(_, c)| c), Some(BoundaryClass::A));
        }
        for &b in &g.boundary_b {
            let v = &g.vertices[b as usize];
            assert_eq!(index.classify(v.position).map(|(_, c)| c), Some(BoundaryClass::B));
        }
    }

    #[test]
    fn tolerance_robustness() {
        // A 10× change of snap tolerance must not change the graph.
        let p = params(2);
        for kind in [GraphKind::G, GraphKind::D] {
            let mults = [DEFAULT_SNAP_MULTIPLIER / 10.0, DEFAULT_SNAP_MULTIPLIER * 10.0];
            let reference = build_graph(&p, 2, kind).unwrap();
            for mult in mults {
                let other = build_graph_with_tolerance(&p, 2, kind, mult).unwrap();
                assert_eq!(other.vertex_count(), reference.vertex_count());
                assert_eq!(other.edges, reference.edges);
                assert_eq!(other.boundary_a, reference.boundary_a);
                assert_eq!(other.boundary_b, reference.boundary_b);
            }
        }
    }

    #[test]
    fn symmetry_permutations_exist_and_act_correctly() {
        for n in [2u32, 3] {
            let p = params(n);
            for kind in [GraphKind::G, GraphKind::D] {
                let g = build_graph(&p, 2, kind).unwrap();
                let theta2 = g.symmetry_permutation(GraphSymmetry::Theta2).unwrap();
                assert!(theta2.swaps_ab);
                let conj = g.symmetry_permutation(GraphSymmetry::Conj).unwrap();
                assert!(!conj.swaps_ab);
                // θ² iterated 2N times is a full turn.
                let mut iterated = theta2.clone();
                for _ in 1..2 * n {
                    iterated = iterated.then(&theta2);
                }
                assert!(iterated.is_identity());
                // conjugation is an involution
                assert!(conj.then(&conj).is_identity());
            }
        }
    }

    #[test]
    fn graph_json_shape() {
        let p = params(2);
        let g = build_graph(&p, 1, GraphKind::G).unwrap();
        let json = graph_json(&g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["kind"], "G");
        assert_eq!(v["vertices"].as_array().unwrap().len(), 24);
        assert_eq!(v["edges"].as_array().unwrap().len(), 24);
        assert_eq!(v["A"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn graph_svg_overlays_the_carpet() {
        let p = params(2);
        let g = build_graph(&p, 1, GraphKind::D).unwrap();
        let svg = graph_svg(&g).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</g>\n</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), g.vertex_count());
        assert_eq!(svg.matches("<line").count(), g.edge_count());
        assert_eq!(svg.matches("<polygon").count(), 8);
    }
}
