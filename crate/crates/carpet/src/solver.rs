//! Sparse symmetric positive-definite solves.
//!
//! Every linear system in this crate is a Dirichlet-reduced graph Laplacian
//! or P1 stiffness matrix: symmetric, positive definite, and very sparse.
//! Small systems go through a sparse LDLᵀ factorization; large ones through
//! conjugate gradients with Jacobi preconditioning. Both paths are
//! deterministic — CG parallelizes only the row-wise matrix–vector product,
//! whose per-row sums do not depend on the thread count.

use rayon::prelude::*;
use serde::Serialize;
use sprs::{CsMat, SymmetryCheck, TriMat};
use sprs_ldl::Ldl;

use crate::error::{CarpetError, Result};

/// Solver selection knobs.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Use the direct factorization up to this many unknowns.
    pub direct_limit: usize,
    /// CG stops when ‖r‖ ≤ `cg_rel_tol`·‖b‖.
    pub cg_rel_tol: f64,
    /// CG iteration cap as a multiple of √(unknowns).
    pub cg_iteration_multiplier: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            direct_limit: 200_000,
            cg_rel_tol: 1e-12,
            cg_iteration_multiplier: 50.0,
        }
    }
}

/// How a system was solved, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Direct,
    ConjugateGradient { iterations: usize },
}

/// Accumulates symmetric matrix entries and lowers them to CSR.
///
/// Duplicate (row, col) contributions are summed. Insertion order is the
/// caller's responsibility to keep deterministic (this crate always inserts
/// in sorted edge/element order).
pub struct SymmetricAssembler {
    tri: TriMat<f64>,
}

impl SymmetricAssembler {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        SymmetricAssembler {
            tri: TriMat::with_capacity((n, n), nnz_hint),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.tri.add_triplet(row, col, value);
    }

    pub fn build(self) -> CsMat<f64> {
        self.tri.to_csr()
    }
}

/// Solve the SPD system `matrix · x = rhs`.
pub fn solve_spd(matrix: &CsMat<f64>, rhs: &[f64], options: &SolverOptions) -> Result<(Vec<f64>, SolveMethod)> {
    let n = matrix.rows();
    assert_eq!(matrix.cols(), n);
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok((Vec::new(), SolveMethod::Direct));
    }
    if n == 1 {
        // too small for the sparse factorization's working stack
        let d = *matrix.get(0, 0).expect("diagonal entry");
        return Ok((vec![rhs[0] / d], SolveMethod::Direct));
    }
    if n <= options.direct_limit {
        let ldl = Ldl::new()
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .numeric(matrix.view())
            .map_err(|e| CarpetError::Factorization(e.to_string()))?;
        Ok((ldl.solve(&rhs.to_vec()), SolveMethod::Direct))
    } else {
        let cap = (options.cg_iteration_multiplier * (n as f64).sqrt()).ceil() as usize;
        let (x, iterations) = conjugate_gradient(matrix, rhs, options.cg_rel_tol, cap)?;
        Ok((x, SolveMethod::ConjugateGradient { iterations }))
    }
}

/// `y = matrix · x` with rows computed in parallel.
pub fn spd_matvec(matrix: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    debug_assert!(matrix.is_csr());
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        let row = matrix.outer_view(i).expect("row in range");
        *yi = row.iter().map(|(j, &v)| v * x[j]).sum();
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients from `x₀ = 0`.
///
/// Returns the solution and the iteration count, or a convergence error
/// carrying the final relative residual.
pub fn conjugate_gradient(
    matrix: &CsMat<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = *matrix.get(i, i).unwrap_or(&0.0);
            assert!(d > 0.0, "diagonal entry {i} not positive: {d}");
            1.0 / d
        })
        .collect();

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let threshold = rel_tol * b_norm;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for iteration in 0..max_iterations {
        let r_norm = dot(&r, &r).sqrt();
        if r_norm <= threshold {
            return Ok((x, iteration));
        }
        spd_matvec(matrix, &p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    let residual = dot(&r, &r).sqrt() / b_norm;
    if residual <= rel_tol {
        Ok((x, max_iterations))
    } else {
        Err(CarpetError::SolverFailure {
            iterations: max_iterations,
            residual,
        })
    }
}
