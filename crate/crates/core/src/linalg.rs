//! Dense complex linear algebra backed by `faer`.
//!
//! faer is built without its rayon backend, so every factorization runs
//! sequentially and produces the same bits regardless of the caller's thread
//! pool.

use faer::linalg::solvers::Solve;
use faer::Mat;
use ndarray::{Array1, Array2};

use crate::ops::C64;

fn to_faer(a: &Array2<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Solution of a dense system together with the pivot spread of its LU
/// factorization.
pub(crate) struct LuSolution {
    pub x: Array1<C64>,
    /// `min |u_ii| / max |u_ii|` over the diagonal of `U`.
    pub pivot_ratio: f64,
    /// Number of diagonal entries of `U` below `rank_tol * max |u_ii|`.
    pub tiny_pivots: usize,
}

/// Solve `a x = b` by LU with partial pivoting.
pub(crate) fn lu_solve(a: &Array2<C64>, b: &Array1<C64>, rank_tol: f64) -> LuSolution {
    let lu = to_faer(a).partial_piv_lu();
    let u = lu.U();
    let n = u.nrows();
    let diag: Vec<f64> = (0..n).map(|k| u[(k, k)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let tiny_pivots = diag.iter().filter(|&&p| p <= rank_tol * max).count();
    let rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    LuSolution {
        x: Array1::from_shape_fn(n, |i| x[(i, 0)]),
        pivot_ratio: if max > 0.0 { min / max } else { 0.0 },
        tiny_pivots,
    }
}

/// Eigenvalues, right eigenvectors and the inverse eigenvector matrix of a
/// diagonalizable matrix, `A = V diag(λ) V^{-1}`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<C64>,
    pub vectors: Array2<C64>,
    pub inverse: Array2<C64>,
    /// `‖V‖₁ ‖V^{-1}‖₁`
    pub condition: f64,
}

impl EigenSystem {
    /// Fails with the condition estimate (NaN when the iteration itself did
    /// not converge).
    pub fn new(a: &Array2<C64>) -> Result<Self, f64> {
        let m = to_faer(a);
        let eig = m.eigen().map_err(|_| f64::NAN)?;
        let n = a.nrows();
        let s = eig.S().column_vector();
        let values: Vec<C64> = (0..n).map(|k| s[k]).collect();
        let v = eig.U();
        let lu = v.partial_piv_lu();
        let inv = lu.solve(Mat::<C64>::identity(n, n));
        let vectors = from_faer(v);
        let inverse = from_faer(inv.as_ref());
        let condition = one_norm(&vectors) * one_norm(&inverse);
        if !condition.is_finite() || values.iter().any(|z| !z.is_finite()) {
            return Err(condition);
        }
        Ok(Self {
            values,
            vectors,
            inverse,
            condition,
        })
    }
}

pub(crate) fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a hermitian matrix in ascending order.
pub(crate) fn hermitian_eigenvalues(a: &Array2<C64>) -> Option<Vec<f64>> {
    to_faer(a).self_adjoint_eigenvalues(faer::Side::Lower).ok()
}
