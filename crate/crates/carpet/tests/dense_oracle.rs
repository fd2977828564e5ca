//! Cross-validation of the sparse solve path against a completely
//! independent dense formulation: assemble the full graph Laplacian (or
//! stiffness matrix) into a dense matrix, eliminate the terminal rows, and
//! factor with nalgebra's Cholesky. The two code paths share no assembly
//! or factorization logic, so agreement pins down both.

use nalgebra::{Cholesky, DMatrix, DVector};

use carpet::fem::{build_mesh, solve_mixed_bvp, triangle_geometry, NodeMarker};
use carpet::graphs::{build_graph, GraphApprox, GraphKind};
use carpet::network::solve_potential;
use carpet::{CarpetParams, SolverOptions};

/// Solve the unit-conductance Dirichlet problem (boundary-B at 1,
/// boundary-A at 0) densely and return (potential, energy).
fn dense_graph_solve(graph: &GraphApprox) -> (Vec<f64>, f64) {
    let n = graph.vertex_count();
    let mut fixed = vec![None; n];
    for &v in &graph.boundary_a {
        fixed[v as usize] = Some(0.0);
    }
    for &v in &graph.boundary_b {
        fixed[v as usize] = Some(1.0);
    }
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let index: Vec<Option<usize>> = {
        let mut index = vec![None; n];
        for (row, &v) in free.iter().enumerate() {
            index[v] = Some(row);
        }
        index
    };

    let mut matrix = DMatrix::<f64>::zeros(free.len(), free.len());
    let mut rhs = DVector::<f64>::zeros(free.len());
    for edge in &graph.edges {
        let (a, b) = (edge[0] as usize, edge[1] as usize);
        match (index[a], index[b]) {
            (Some(i), Some(j)) => {
                matrix[(i, i)] += 1.0;
                matrix[(j, j)] += 1.0;
                matrix[(i, j)] -= 1.0;
                matrix[(j, i)] -= 1.0;
            }
            (Some(i), None) => {
                matrix[(i, i)] += 1.0;
                rhs[i] += fixed[b].unwrap();
            }
            (None, Some(j)) => {
                matrix[(j, j)] += 1.0;
                rhs[j] += fixed[a].unwrap();
            }
            (None, None) => {}
        }
    }

    let solved = Cholesky::new(matrix)
        .expect("dense Laplacian block is positive definite")
        .solve(&rhs);
    let mut potential = vec![0.0; n];
    for (v, value) in fixed.iter().enumerate() {
        if let Some(value) = value {
            potential[v] = *value;
        }
    }
    for (row, &v) in free.iter().enumerate() {
        potential[v] = solved[row];
    }
    let energy: f64 = graph
        .edges
        .iter()
        .map(|e| {
            let d = potential[e[0] as usize] - potential[e[1] as usize];
            d * d
        })
        .sum();
    (potential, energy)
}

#[test]
fn graph_solutions_match_dense_cholesky() {
    let options = SolverOptions::default();
    for n in [2u32, 3] {
        let params = CarpetParams::new(n).unwrap();
        for kind in [GraphKind::G, GraphKind::D] {
            for m in [1u32, 2] {
                let graph = build_graph(&params, m, kind).unwrap();
                let sparse = solve_potential(&graph, &options).unwrap();
                let (dense, energy) = dense_graph_solve(&graph);
                let max_diff = sparse
                    .potential
                    .iter()
                    .zip(&dense)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(
                    max_diff < 1e-10,
                    "N={n} {kind:?} m={m}: potential differs by {max_diff:e}"
                );
                let resistance = 1.0 / energy;
                assert!(
                    (sparse.resistance - resistance).abs() < 1e-10 * resistance,
                    "N={n} {kind:?} m={m}: resistance mismatch"
                );
            }
        }
    }
}

#[test]
fn fem_solution_matches_dense_cholesky() {
    let params = CarpetParams::new(2).unwrap();
    let mesh = build_mesh(&params, 0, 2).unwrap();
    let sparse = solve_mixed_bvp(&mesh, &SolverOptions::default()).unwrap();

    let n = mesh.node_count();
    let mut fixed = vec![None; n];
    for (v, marker) in mesh.markers.iter().enumerate() {
        match marker {
            NodeMarker::DirichletA => fixed[v] = Some(0.0),
            NodeMarker::DirichletB => fixed[v] = Some(1.0),
            _ => {}
        }
    }
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let mut index = vec![None; n];
    for (row, &v) in free.iter().enumerate() {
        index[v] = Some(row);
    }

    let mut matrix = DMatrix::<f64>::zeros(free.len(), free.len());
    let mut rhs = DVector::<f64>::zeros(free.len());
    for tri in &mesh.triangles {
        let [a, b, c] = *tri;
        let (area, grads) = triangle_geometry(
            mesh.nodes[a as usize],
            mesh.nodes[b as usize],
            mesh.nodes[c as usize],
        );
        let local = [a as usize, b as usize, c as usize];
        for (p, &vp) in local.iter().enumerate() {
            let Some(i) = index[vp] else { continue };
            for (q, &vq) in local.iter().enumerate() {
                let entry =
                    area * (grads[p][0] * grads[q][0] + grads[p][1] * grads[q][1]);
                match index[vq] {
                    Some(j) => matrix[(i, j)] += entry,
                    None => rhs[i] -= entry * fixed[vq].unwrap(),
                }
            }
        }
    }

    let solved = Cholesky::new(matrix)
        .expect("dense stiffness block is positive definite")
        .solve(&rhs);
    let mut dense = vec![0.0; n];
    for (v, value) in fixed.iter().enumerate() {
        if let Some(value) = value {
            dense[v] = *value;
        }
    }
    for (row, &v) in free.iter().enumerate() {
        dense[v] = solved[row];
    }

    let max_diff = sparse
        .potential
        .iter()
        .zip(&dense)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(max_diff < 1e-10, "potential differs by {max_diff:e}");
}
