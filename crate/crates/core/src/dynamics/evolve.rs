use ndarray::Array1;

use super::{steady_state, trace_product, DensityMatrix};
use crate::error::{Error, Result};
use crate::ops::{liouvillian, vectorize, LindbladModel, Operator, Superoperator, C64};

/// Eigenvector condition estimate above which propagation switches to
/// direct integration.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Step of the fallback integrator, in units of 1/γ.
pub const RK4_STEP: f64 = 1e-3;
/// Mean emitter population below which g2 is not normalizable.
const MIN_POPULATION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagation {
    /// `V e^{Λτ} V^{-1}` from the eigendecomposition of `L`.
    Spectral,
    /// Fixed-step fourth-order Runge-Kutta.
    Integrated,
}

/// Which route [`evolve_vec`] takes for this superoperator.
pub fn propagation_method(l: &Superoperator) -> Result<Propagation> {
    match &*l.eigen() {
        Ok(e) if e.condition <= CONDITION_LIMIT => Ok(Propagation::Spectral),
        Ok(_) => Ok(Propagation::Integrated),
        Err(cond) => Err(Error::Eigen { condition: *cond }),
    }
}

fn check_taus(taus: &[f64]) -> Result<()> {
    if taus.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "delays must be finite and >= 0".into(),
        ));
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "delays must be sorted ascending".into(),
        ));
    }
    Ok(())
}

/// `v(τ) = e^{Lτ} v0` for every delay in `taus`.
pub fn evolve_vec(l: &Superoperator, v0: &Array1<C64>, taus: &[f64]) -> Result<Vec<Array1<C64>>> {
    check_taus(taus)?;
    if v0.len() != l.dim() {
        return Err(Error::DimMismatch {
            expected: l.dim(),
            found: v0.len(),
        });
    }
    let eig = l.eigen();
    let eig = match &*eig {
        Err(cond) => return Err(Error::Eigen { condition: *cond }),
        Ok(e) if e.condition > CONDITION_LIMIT => return Ok(integrate(l, v0, taus)),
        Ok(e) => e,
    };
    let coeffs = eig.inverse.dot(v0);
    Ok(taus
        .iter()
        .map(|&tau| {
            if tau == 0.0 {
                return v0.clone();
            }
            let scaled: Array1<C64> = coeffs
                .iter()
                .zip(&eig.values)
                .map(|(c, lam)| c * (lam * tau).exp())
                .collect();
            eig.vectors.dot(&scaled)
        })
        .collect())
}

fn integrate(l: &Superoperator, v0: &Array1<C64>, taus: &[f64]) -> Vec<Array1<C64>> {
    let mut out = Vec::with_capacity(taus.len());
    let mut v = v0.clone();
    let mut t = 0.0;
    for &tau in taus {
        let span = tau - t;
        if span > 0.0 {
            let steps = (span / RK4_STEP).ceil() as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = l.apply(&v);
                let k2 = l.apply(&(&v + &k1.mapv(|z| z * (h / 2.0))));
                let k3 = l.apply(&(&v + &k2.mapv(|z| z * (h / 2.0))));
                let k4 = l.apply(&(&v + &k3.mapv(|z| z * h)));
                v = &v
                    + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4)
                        .mapv(|z| z * (h / 6.0));
            }
            t = tau;
        }
        out.push(v.clone());
    }
    out
}

/// Modal expansion `G(τ) = Σ_k w_k e^{λ_k τ}` of `o · e^{Lτ} x0`, or `None`
/// when the eigenvectors are too ill-conditioned to trust.
pub(crate) fn modal_weights(
    l: &Superoperator,
    observe_row: &Array1<C64>,
    x0: &Array1<C64>,
) -> Result<Option<Vec<(C64, C64)>>> {
    let eig = l.eigen();
    let eig = match &*eig {
        Err(cond) => return Err(Error::Eigen { condition: *cond }),
        Ok(e) if e.condition > CONDITION_LIMIT => return Ok(None),
        Ok(e) => e,
    };
    let right = eig.inverse.dot(x0);
    let left = observe_row.dot(&eig.vectors);
    Ok(Some(
        eig.values
            .iter()
            .zip(left.iter().zip(right.iter()))
            .map(|(lam, (a, b))| (*lam, a * b))
            .collect(),
    ))
}

/// `G(τ) = Tr[observe · e^{Lτ}(left ρ_ss right)]`
pub fn two_time_correlator(
    l: &Superoperator,
    rho_ss: &DensityMatrix,
    left: &Operator,
    right: &Operator,
    observe: &Operator,
    taus: &[f64],
) -> Result<Vec<C64>> {
    check_taus(taus)?;
    for op in [left, right, observe] {
        if op.layout() != rho_ss.layout() || op.layout() != l.layout() {
            return Err(Error::LayoutMismatch);
        }
    }
    let seed = left.matrix().dot(rho_ss.matrix()).dot(right.matrix());
    let x0 = vectorize(&seed);
    // Tr[O X] = Σ_ij O_ji X_ij = vec(O^T) · vec(X)
    let o = vectorize(&observe.matrix().t().to_owned());
    match modal_weights(l, &o, &x0)? {
        Some(modes) => Ok(taus
            .iter()
            .map(|&tau| {
                if tau == 0.0 {
                    trace_product(observe.matrix(), &seed)
                } else {
                    modes.iter().map(|(lam, w)| w * (lam * tau).exp()).sum()
                }
            })
            .collect()),
        None => Ok(evolve_vec(l, &x0, taus)?.iter().map(|v| o.dot(v)).collect()),
    }
}

/// Normalized second-order correlation as a function of delay.
#[derive(Clone, Debug)]
pub struct G2TauResult {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
}

impl G2TauResult {
    /// `|g2(τ_last) - 1|`
    pub fn tail_deviation(&self) -> f64 {
        self.values.last().map_or(f64::NAN, |v| (v - 1.0).abs())
    }
}

/// `g2(τ) = <a^†(0) a^†(τ) a(τ) a(0)> / <a^†a>^2` for the model's emission
/// operator `a`.
pub fn g2_tau_unfiltered(model: &LindbladModel, taus: &[f64]) -> Result<G2TauResult> {
    let l = liouvillian(model);
    let rho = steady_state(&l)?;
    let a = model.emission();
    let a_dag = a.adjoint();
    let n_op = a_dag.dot(a);
    let population = trace_product(n_op.matrix(), rho.matrix()).re;
    if population < MIN_POPULATION {
        return Err(Error::ZeroPopulation { population });
    }
    let g = two_time_correlator(&l, &rho, a, &a_dag, &n_op, taus)?;
    Ok(G2TauResult {
        taus: taus.to_vec(),
        values: g.iter().map(|z| z.re / (population * population)).collect(),
    })
}
