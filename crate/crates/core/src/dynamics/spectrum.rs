use std::f64::consts::PI;

use super::{steady_state, trace_product};
use crate::error::{Error, Result};
use crate::ops::{liouvillian, vectorize, LindbladModel, C64};

use super::evolve::modal_weights;

/// Eigenvalues with modulus below this are treated as the stationary mode.
const ZERO_MODE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Trapezoid integral over the grid equals one.
    UnitArea,
    Raw,
}

impl Normalization {
    pub fn tag(self) -> &'static str {
        match self {
            Normalization::UnitArea => "unit-area",
            Normalization::Raw => "raw",
        }
    }
}

/// Spectrum sampled on a frequency grid.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub normalization: Normalization,
    /// Weight of the elastic (delta) component, in the units of `values`.
    /// Zero for filtered spectra, where it is already folded in.
    pub coherent_weight: f64,
}

impl SpectrumResult {
    pub fn area(&self) -> f64 {
        trapezoid(&self.frequencies, &self.values)
    }

    /// Trapezoid integral restricted to grid points inside `[lo, hi]`.
    pub fn integrate_window(&self, lo: f64, hi: f64) -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .frequencies
            .iter()
            .zip(&self.values)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(w, s)| (*w, *s))
            .unzip();
        trapezoid(&xs, &ys)
    }

    /// Indices of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rescale to unit trapezoid area.
    pub(crate) fn normalized(mut self) -> Result<Self> {
        let area = self.area();
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "spectrum has non-positive area {area:e} on the grid"
            )));
        }
        self.values.iter_mut().for_each(|v| *v /= area);
        self.coherent_weight /= area;
        self.normalization = Normalization::UnitArea;
        Ok(self)
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Pole expansion of the first-order correlator `<a^†(0) a(τ)>`.
#[derive(Clone, Debug)]
pub struct SpectralModes {
    /// `(λ_k, w_k)` pairs with `λ_k != 0`; each contributes a line centred at
    /// `-Im λ_k` with half-width `-Re λ_k`.
    pub modes: Vec<(C64, C64)>,
    /// `|<a>|^2`, the elastically scattered part.
    pub coherent: f64,
    /// `<a^†a>`
    pub population: f64,
}

impl SpectralModes {
    /// Incoherent spectral density `(1/π) Re Σ_k -w_k / (λ_k + iω)`.
    pub fn density(&self, omega: f64) -> f64 {
        let iw = C64::new(0.0, omega);
        self.modes
            .iter()
            .map(|(lam, w)| (-w / (lam + iw)).re)
            .sum::<f64>()
            / PI
    }

    /// Integrated weight of the lines centred within `tol` of `omega`.
    pub fn line_weight(&self, omega: f64, tol: f64) -> f64 {
        self.modes
            .iter()
            .filter(|(lam, _)| (-lam.im - omega).abs() <= tol)
            .map(|(_, w)| w.re)
            .sum()
    }
}

/// Decompose `<a^†(0) a(τ)>` over the Liouvillian eigenmodes.
pub fn emission_modes(model: &LindbladModel) -> Result<SpectralModes> {
    let l = liouvillian(model);
    let rho = steady_state(&l)?;
    let a = model.emission();
    let a_dag = a.adjoint();
    let x0 = vectorize(&rho.matrix().dot(a_dag.matrix()));
    let o = vectorize(&a.matrix().t().to_owned());
    let modes = modal_weights(&l, &o, &x0)?.ok_or_else(|| {
        let condition = l
            .eigen()
            .as_ref()
            .as_ref()
            .map_or(f64::NAN, |e| e.condition);
        Error::Eigen { condition }
    })?;
    let population = trace_product(a_dag.dot(a).matrix(), rho.matrix()).re;
    let mean_a = trace_product(a.matrix(), rho.matrix());
    let (zero, rest): (Vec<_>, Vec<_>) = modes
        .into_iter()
        .partition(|(lam, _)| lam.norm() < ZERO_MODE_TOL);
    if zero.len() != 1 {
        return Err(Error::DegenerateSteadyState {
            nullity: zero.len(),
        });
    }
    Ok(SpectralModes {
        modes: rest,
        coherent: mean_a.norm_sqr(),
        population,
    })
}

/// Incoherent emission spectrum on `grid`, normalized to unit area, with the
/// elastic component reported separately.
pub fn spectrum_qrt(model: &LindbladModel, grid: &[f64]) -> Result<SpectrumResult> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "spectrum grid needs >= 2 points".into(),
        ));
    }
    let modes = emission_modes(model)?;
    SpectrumResult {
        frequencies: grid.to_vec(),
        values: grid.iter().map(|&w| modes.density(w)).collect(),
        normalization: Normalization::Raw,
        coherent_weight: modes.coherent,
    }
    .normalized()
}
