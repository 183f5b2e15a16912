//! Resonance fluorescence and derived configurations.
//!
//! Everything is expressed in units of the emitter decay rate γ = 1, in the
//! frame rotating at the laser frequency. The drive enters as
//! `(Ω_R / 2)(σ + σ^†)`, so under strong driving the sideband splitting tends
//! to `Ω_R`.

use crate::dynamics::{expval, g2_tau_unfiltered, steady_state};
use crate::error::{Error, Result};
use crate::ops::{
    destroy, embed, liouvillian, sigma_lower, Collapse, LindbladModel, Operator, SpaceLayout, C64,
};

pub const EMITTER: &str = "2LS";
pub const CAVITY: &str = "cavity";
pub const MODE: &str = "mode";

/// Largest population tolerated in the highest retained Fock state.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-6;

/// Imaginary parts below this count as zero when looking for the splitting.
const OSCILLATION_TOL: f64 = 1e-9;

/// Drive of a two-level emitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RFParams {
    /// Rabi frequency Ω_R.
    pub rabi: f64,
    /// Laser-emitter detuning Δ.
    pub detuning: f64,
}

impl RFParams {
    pub fn resonant(rabi: f64) -> Self {
        Self {
            rabi,
            detuning: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0) || !self.rabi.is_finite() {
            return Err(Error::InvalidParameter(format!("rabi = {}", self.rabi)));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "detuning = {}",
                self.detuning
            )));
        }
        Ok(())
    }
}

impl Default for RFParams {
    /// Ω_R = 20γ at resonance.
    fn default() -> Self {
        Self::resonant(DEFAULT_RABI)
    }
}

/// Default drive for reproducing the triplet and the two-photon map.
pub const DEFAULT_RABI: f64 = 20.0;
/// Default filter linewidth for the two-photon map.
pub const DEFAULT_GAMMA_FILTER: f64 = 0.5;
/// Default half-width of the two-photon map window, in units of Ω₊.
pub const DEFAULT_WINDOW: f64 = 1.5;

fn emitter_hamiltonian(p: &RFParams, layout: &SpaceLayout) -> Result<Operator> {
    let s = embed(&sigma_lower(), layout, EMITTER)?;
    let s_dag = s.adjoint();
    let h = &s_dag.dot(&s).scaled(p.detuning) + &(&s + &s_dag).scaled(p.rabi / 2.0);
    Ok(h)
}

/// Coherently driven two-level emitter with radiative decay γ = 1.
pub fn rf_model(p: &RFParams) -> Result<LindbladModel> {
    p.validate()?;
    let layout = SpaceLayout::single(EMITTER, 2)?;
    let s = embed(&sigma_lower(), &layout, EMITTER)?;
    let h = emitter_hamiltonian(p, &layout)?;
    LindbladModel::new(
        h,
        vec![Collapse {
            rate: 1.0,
            op: s.clone(),
        }],
        s,
    )
}

/// Single bosonic mode with incoherent pump `pump` and decay `decay`.
pub fn thermal_mode(dim: usize, pump: f64, decay: f64) -> Result<LindbladModel> {
    let layout = SpaceLayout::single(MODE, dim)?;
    let a = embed(&destroy(dim), &layout, MODE)?;
    LindbladModel::new(
        Operator::zeros(&layout),
        vec![
            Collapse {
                rate: decay,
                op: a.clone(),
            },
            Collapse {
                rate: pump,
                op: a.adjoint(),
            },
        ],
        a,
    )
}

/// Dressed-state quantities of the driven emitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressedStructure {
    /// Ω₊, distance between the central and satellite lines.
    pub splitting: f64,
    /// Single-photon line positions `{-Ω₊, 0, Ω₊}`.
    pub line_positions: [f64; 3],
    /// Conserved two-photon frequency sums `{-Ω₊, 0, Ω₊}`.
    pub leapfrog_sums: [f64; 3],
}

impl DressedStructure {
    /// All pairs `(ω₁, ω₂)` where both photons sit on a single-photon line.
    pub fn peak_intersections(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(9);
        for &a in &self.line_positions {
            for &b in &self.line_positions {
                out.push((a, b));
            }
        }
        out
    }
}

/// Ω₊ is the largest oscillation frequency among the Liouvillian
/// eigenvalues of the driven emitter.
pub fn dressed_structure(p: &RFParams) -> Result<DressedStructure> {
    let l = liouvillian(&rf_model(p)?);
    let eig = l.eigen();
    let eig = eig
        .as_ref()
        .as_ref()
        .map_err(|&condition| Error::Eigen { condition })?;
    let splitting = eig.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if splitting < OSCILLATION_TOL {
        return Err(Error::Regime(format!(
            "all Liouvillian eigenvalues are real at Ω_R = {} (overdamped)",
            p.rabi
        )));
    }
    Ok(DressedStructure {
        splitting,
        line_positions: [-splitting, 0.0, splitting],
        leapfrog_sums: [-splitting, 0.0, splitting],
    })
}

/// Locus `ω₁ + ω₂ = sum` of a two-photon leapfrog transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeapfrogLine {
    pub sum: f64,
}

impl LeapfrogLine {
    /// Frequency of the second photon given the first.
    pub fn partner(&self, omega1: f64) -> f64 {
        self.sum - omega1
    }

    pub fn contains(&self, omega1: f64, omega2: f64, tol: f64) -> bool {
        (omega1 + omega2 - self.sum).abs() <= tol
    }

    /// Points on the line with both coordinates in `[-half_width, half_width]`
    /// and farther than `exclusion` from every peak intersection, evenly
    /// spread over the admissible range of ω₁.
    pub fn off_peak_samples(
        &self,
        structure: &DressedStructure,
        half_width: f64,
        exclusion: f64,
        count: usize,
    ) -> Vec<(f64, f64)> {
        const RESOLUTION: usize = 2001;
        let peaks = structure.peak_intersections();
        let lo = (-half_width).max(self.sum - half_width);
        let hi = half_width.min(self.sum + half_width);
        let admissible: Vec<(f64, f64)> = (0..RESOLUTION)
            .map(|k| lo + (hi - lo) * k as f64 / (RESOLUTION - 1) as f64)
            .map(|w1| (w1, self.partner(w1)))
            .filter(|&(w1, w2)| {
                peaks
                    .iter()
                    .all(|&(a, b)| ((w1 - a).powi(2) + (w2 - b).powi(2)).sqrt() > exclusion)
            })
            .collect();
        if admissible.is_empty() || count == 0 {
            return Vec::new();
        }
        (0..count)
            .map(|k| {
                let idx = ((k as f64 + 0.5) / count as f64 * admissible.len() as f64) as usize;
                admissible[idx.min(admissible.len() - 1)]
            })
            .collect()
    }
}

/// The three antidiagonals along which leapfrog transitions appear.
pub fn leapfrog_lines(p: &RFParams) -> Result<[LeapfrogLine; 3]> {
    let s = dressed_structure(p)?;
    Ok(s.leapfrog_sums.map(|sum| LeapfrogLine { sum }))
}

/// Emitter coupled to a lossy cavity tuned to a fraction of Ω₊.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleParams {
    pub n: usize,
    pub cavity_coupling: f64,
    pub cavity_decay: f64,
    pub fock_truncation: usize,
}

impl Default for BundleParams {
    fn default() -> Self {
        Self {
            n: 2,
            cavity_coupling: 0.05,
            cavity_decay: 0.1,
            fock_truncation: 6,
        }
    }
}

impl BundleParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "bundle n = {} (< 2)",
                self.n
            )));
        }
        if self.fock_truncation < 2 * self.n + 2 {
            return Err(Error::InvalidParameter(format!(
                "fock_truncation = {} (< 2n + 2 = {})",
                self.fock_truncation,
                2 * self.n + 2
            )));
        }
        if !(self.cavity_coupling >= 0.0) || !self.cavity_coupling.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cavity_coupling = {}",
                self.cavity_coupling
            )));
        }
        if !(self.cavity_decay > 0.0) || !self.cavity_decay.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cavity_decay = {}",
                self.cavity_decay
            )));
        }
        Ok(())
    }
}

/// Cavity at `+Ω₊ / n`, the n-photon leapfrog resonance.
pub fn bundle_model(p: &RFParams, b: &BundleParams) -> Result<LindbladModel> {
    b.validate()?;
    let s = dressed_structure(p)?;
    cavity_model(p, b, s.splitting / b.n as f64)
}

/// Emitter plus cavity at an arbitrary frequency (laser frame). The steady
/// state is solved once to check the Fock truncation.
pub fn cavity_model(
    p: &RFParams,
    b: &BundleParams,
    cavity_frequency: f64,
) -> Result<LindbladModel> {
    p.validate()?;
    b.validate()?;
    let n_fock = b.fock_truncation;
    let layout = SpaceLayout::new([(EMITTER, 2), (CAVITY, n_fock)])?;
    let s = embed(&sigma_lower(), &layout, EMITTER)?;
    let a = embed(&destroy(n_fock), &layout, CAVITY)?;
    let a_dag = a.adjoint();
    let coupling = &a_dag.dot(&s) + &s.adjoint().dot(&a);
    let h = &(&emitter_hamiltonian(p, &layout)? + &a_dag.dot(&a).scaled(cavity_frequency))
        + &coupling.scaled(b.cavity_coupling);
    let model = LindbladModel::new(
        h,
        vec![
            Collapse { rate: 1.0, op: s },
            Collapse {
                rate: b.cavity_decay,
                op: a.clone(),
            },
        ],
        a,
    )?;
    let tail = top_fock_population(&model, n_fock)?;
    if tail >= TRUNCATION_TAIL_LIMIT {
        return Err(Error::Truncation {
            tail,
            limit: TRUNCATION_TAIL_LIMIT,
        });
    }
    Ok(model)
}

fn top_fock_population(model: &LindbladModel, n_fock: usize) -> Result<f64> {
    let rho = steady_state(&liouvillian(model))?;
    let mut proj = ndarray::Array2::zeros((n_fock, n_fock));
    proj[[n_fock - 1, n_fock - 1]] = C64::new(1.0, 0.0);
    let proj = embed(&proj, model.layout(), CAVITY)?;
    Ok(expval(&rho, &proj)?.re)
}

/// Cavity observables of the bundle configuration next to a reference cavity
/// tuned to the single-photon sideband.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleComparison {
    pub cavity_frequency: f64,
    pub reference_frequency: f64,
    /// Cavity `g2(0)` with the cavity at `Ω₊ / n`.
    pub g2_zero: f64,
    /// Cavity `g2(0)` with the cavity at `Ω₊`.
    pub reference_g2_zero: f64,
    pub cavity_population: f64,
    /// Cavity population with the Fock truncation doubled.
    pub doubled_population: f64,
}

impl BundleComparison {
    /// Relative population change under truncation doubling.
    pub fn truncation_change(&self) -> f64 {
        ((self.doubled_population - self.cavity_population) / self.doubled_population).abs()
    }
}

fn cavity_population(model: &LindbladModel) -> Result<f64> {
    let rho = steady_state(&liouvillian(model))?;
    let a = model.emission();
    Ok(expval(&rho, &a.adjoint().dot(a))?.re)
}

pub fn bundle_comparison(p: &RFParams, b: &BundleParams) -> Result<BundleComparison> {
    let splitting = dressed_structure(p)?.splitting;
    let cavity_frequency = splitting / b.n as f64;
    let model = bundle_model(p, b)?;
    let reference = cavity_model(p, b, splitting)?;
    let doubled = cavity_model(
        p,
        &BundleParams {
            fock_truncation: 2 * b.fock_truncation,
            ..*b
        },
        cavity_frequency,
    )?;
    Ok(BundleComparison {
        cavity_frequency,
        reference_frequency: splitting,
        g2_zero: g2_tau_unfiltered(&model, &[0.0])?.values[0],
        reference_g2_zero: g2_tau_unfiltered(&reference, &[0.0])?.values[0],
        cavity_population: cavity_population(&model)?,
        doubled_population: cavity_population(&doubled)?,
    })
}
