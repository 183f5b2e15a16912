//! Steady states, regression-theorem correlators and emission spectra.

mod evolve;
mod spectrum;

pub use evolve::{
    evolve_vec, g2_tau_unfiltered, propagation_method, two_time_correlator, G2TauResult,
    Propagation, CONDITION_LIMIT, RK4_STEP,
};
pub use spectrum::{
    emission_modes, spectrum_qrt, trapezoid, Normalization, SpectralModes, SpectrumResult,
};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, lu_solve};
use crate::ops::{adjoint, unvectorize, vectorize, Operator, SpaceLayout, Superoperator, C64};

/// Largest tolerated `|L vec(ρ)|` entry for a steady state.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-10;
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Relative pivot size below which the bordered steady-state system is
/// counted as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// A validated density matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Checks unit trace, hermiticity and positivity.
    pub fn new(layout: SpaceLayout, matrix: Array2<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        let trace: C64 = matrix.diag().sum();
        if (trace - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::SteadyState(format!("trace is {trace}")));
        }
        let defect = (&matrix - &adjoint(&matrix))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > DENSITY_HERMITIAN_TOL {
            return Err(Error::SteadyState(format!(
                "density matrix is not hermitian (defect {defect:e})"
            )));
        }
        let herm = (&matrix + &adjoint(&matrix)).mapv(|z| z * 0.5);
        let min_eig = linalg::hermitian_eigenvalues(&herm)
            .and_then(|e| e.first().copied())
            .ok_or_else(|| Error::SteadyState("eigenvalue check failed".into()))?;
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::SteadyState(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self {
            layout,
            matrix: herm,
        })
    }

    /// Projector onto basis state `index`.
    pub fn basis(layout: &SpaceLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        let mut m = Array2::zeros((d, d));
        m[[index, index]] = C64::new(1.0, 0.0);
        Self::new(layout.clone(), m)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn vectorized(&self) -> Array1<C64> {
        vectorize(&self.matrix)
    }
}

/// Unique steady state of `l`.
///
/// One row of `L` is replaced by the trace functional and the bordered
/// system is solved by LU. A rank-deficient bordered system means the kernel
/// of `L` is more than one-dimensional, which is reported rather than
/// resolved.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let d = l.hilbert_dim();
    let n = d * d;
    let mut bordered = l.matrix().clone();
    bordered.row_mut(0).fill(C64::new(0.0, 0.0));
    for k in 0..d {
        bordered[[0, k + k * d]] = C64::new(1.0, 0.0);
    }
    let mut rhs = Array1::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);

    let sol = lu_solve(&bordered, &rhs, RANK_TOL);
    if sol.tiny_pivots > 0 {
        return Err(Error::DegenerateSteadyState {
            nullity: sol.tiny_pivots + 1,
        });
    }
    if sol.x.iter().any(|z| !z.is_finite()) {
        return Err(Error::SteadyState(format!(
            "non-finite solution (pivot ratio {:e})",
            sol.pivot_ratio
        )));
    }
    let residual = l.apply(&sol.x).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual >= STEADY_RESIDUAL_TOL {
        return Err(Error::SteadyState(format!(
            "residual {residual:e} exceeds {STEADY_RESIDUAL_TOL:e}"
        )));
    }
    DensityMatrix::new(l.layout().clone(), unvectorize(&sol.x, d))
}

/// `Tr(op ρ)`
pub fn expval(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.layout() != op.layout() {
        return Err(Error::LayoutMismatch);
    }
    Ok(trace_product(op.matrix(), rho.matrix()))
}

/// `Tr(a b)` without forming the product.
pub(crate) fn trace_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}
