//! Frequency-resolved correlations from weakly coupled two-level sensors.
//!
//! Each detector is a two-level system `ς` with transition frequency `ω`,
//! decay rate `Γ` (the filter linewidth) and a coupling
//! `ε (a ς^† + a^† ς)` to the emission operator `a`. For `ε → 0` the sensor
//! populations are proportional to the filtered intensity and their
//! normalized cross-moments give the filtered correlation functions. The
//! coupling is bidirectional rather than cascaded; back-action is of higher
//! order in `ε` and is monitored through the ε-drift of every result.

use std::cmp::Ordering;

use ndarray::Array2;

use crate::dynamics::{
    expval, steady_state, two_time_correlator, DensityMatrix, G2TauResult, Normalization,
    SpectrumResult,
};
use crate::error::{Error, Result};
use crate::ops::{kron, liouvillian, sigma_lower, Collapse, LindbladModel, Operator, SpaceLayout};
use crate::parallel;

pub const MAX_SENSORS: usize = 3;
/// Largest Hilbert-space dimension after attaching sensors.
pub const MAX_HILBERT_DIM: usize = 64;
/// Sensor populations below this are considered unresolvable.
pub const MIN_SENSOR_POPULATION: f64 = 1e-18;

/// One spectral detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensorSpec {
    /// Detection frequency ω (laser frame, units of γ).
    pub omega: f64,
    /// Filter linewidth Γ.
    pub gamma_filter: f64,
    /// Coupling ε; `None` defers to the [`EpsilonPolicy`] default.
    pub epsilon: Option<f64>,
}

impl SensorSpec {
    pub fn new(omega: f64, gamma_filter: f64) -> Self {
        Self {
            omega,
            gamma_filter,
            epsilon: None,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self {
            epsilon: Some(epsilon),
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sensor ω = {}",
                self.omega
            )));
        }
        if !(self.gamma_filter > 0.0) || !self.gamma_filter.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sensor Γ = {} (must be > 0)",
                self.gamma_filter
            )));
        }
        Ok(())
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.omega
            .total_cmp(&other.omega)
            .then(self.gamma_filter.total_cmp(&other.gamma_filter))
            .then(
                self.epsilon
                    .unwrap_or(0.0)
                    .total_cmp(&other.epsilon.unwrap_or(0.0)),
            )
    }
}

/// How the sensor coupling is chosen and checked.
///
/// ε defaults to `default_factor * min(γ, Γ₁, Γ₂, ...)` and may not exceed
/// `max_factor * min(...)`. Results are recomputed at ε/2; while the relative
/// change exceeds `drift_tolerance` ε keeps being halved, at most
/// `max_halvings` times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonPolicy {
    pub default_factor: f64,
    pub max_factor: f64,
    pub drift_tolerance: f64,
    pub max_halvings: u32,
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        Self {
            default_factor: 1e-3,
            max_factor: 1e-2,
            drift_tolerance: 0.01,
            max_halvings: 3,
        }
    }
}

impl EpsilonPolicy {
    fn rate_scale(specs: &[SensorSpec]) -> f64 {
        // emitter decay rate γ = 1 sets the unit
        specs.iter().map(|s| s.gamma_filter).fold(1.0, f64::min)
    }

    pub fn default_epsilon(&self, specs: &[SensorSpec]) -> f64 {
        self.default_factor * Self::rate_scale(specs)
    }

    pub fn max_epsilon(&self, specs: &[SensorSpec]) -> f64 {
        self.max_factor * Self::rate_scale(specs)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.default_factor > 0.0
            && self.max_factor >= self.default_factor
            && self.drift_tolerance > 0.0
            && self.max_factor.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("epsilon policy {self:?}")))
        }
    }

    /// Fill in missing couplings and check them against the maximum.
    pub fn resolve(&self, specs: &[SensorSpec]) -> Result<Vec<SensorSpec>> {
        self.validate()?;
        let default = self.default_epsilon(specs);
        let max = self.max_epsilon(specs);
        specs
            .iter()
            .map(|s| {
                s.validate()?;
                let eps = s.epsilon.unwrap_or(default);
                if !(eps > 0.0) || eps > max * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "sensor ε = {eps:e} outside (0, {max:e}]"
                    )));
                }
                Ok(s.with_epsilon(eps))
            })
            .collect()
    }
}

/// A model with sensors appended to its layout.
#[derive(Clone, Debug)]
pub struct SensedModel {
    pub model: LindbladModel,
    /// Lowering operators of the sensors, in attachment order.
    pub sensors: Vec<Operator>,
    /// Specs with the coupling filled in.
    pub specs: Vec<SensorSpec>,
}

impl SensedModel {
    /// `<ς_i^† ς_i>` for every sensor.
    pub fn populations(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.sensors
            .iter()
            .map(|s| Ok(expval(rho, &s.adjoint().dot(s))?.re))
            .collect()
    }

    /// `<Π_i ς_i^† ς_i>`; the sensors commute so order is irrelevant.
    pub fn joint_moment(&self, rho: &DensityMatrix) -> Result<f64> {
        let mut prod = Operator::identity(self.model.layout());
        for s in &self.sensors {
            prod = prod.dot(&s.adjoint().dot(s));
        }
        Ok(expval(rho, &prod)?.re)
    }
}

pub fn sensor_label(k: usize) -> String {
    format!("sensor{}", k + 1)
}

/// Attach sensors using the default coupling policy.
pub fn attach_sensors(model: &LindbladModel, specs: &[SensorSpec]) -> Result<SensedModel> {
    attach_sensors_with(model, specs, &EpsilonPolicy::default())
}

pub fn attach_sensors_with(
    model: &LindbladModel,
    specs: &[SensorSpec],
    policy: &EpsilonPolicy,
) -> Result<SensedModel> {
    if specs.len() > MAX_SENSORS {
        return Err(Error::DimensionBudget(format!(
            "{} sensors requested, at most {MAX_SENSORS} supported",
            specs.len()
        )));
    }
    let total = model.layout().total_dim() << specs.len();
    if total > MAX_HILBERT_DIM {
        return Err(Error::DimensionBudget(format!(
            "augmented Hilbert space has dimension {total} > {MAX_HILBERT_DIM}"
        )));
    }
    let specs = policy.resolve(specs)?;

    let mut layout = model.layout().clone();
    for k in 0..specs.len() {
        layout = layout.with(&sensor_label(k), 2)?;
    }
    let pad: Array2<_> = Array2::eye(1 << specs.len());
    let lift = |op: &Operator| Operator::new(layout.clone(), kron(op.matrix(), &pad));

    let emission = lift(model.emission())?;
    let emission_dag = emission.adjoint();
    let mut hamiltonian = lift(model.hamiltonian())?;
    let mut collapses = model
        .collapses()
        .iter()
        .map(|c| {
            Ok(Collapse {
                rate: c.rate,
                op: lift(&c.op)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sensors = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let s = crate::ops::embed(&sigma_lower(), &layout, &sensor_label(k))?;
        let s_dag = s.adjoint();
        let eps = spec.epsilon.expect("resolved");
        let coupling = &emission.dot(&s_dag) + &emission_dag.dot(&s);
        hamiltonian = &(&hamiltonian + &s_dag.dot(&s).scaled(spec.omega)) + &coupling.scaled(eps);
        collapses.push(Collapse {
            rate: spec.gamma_filter,
            op: s.clone(),
        });
        sensors.push(s);
    }
    Ok(SensedModel {
        model: LindbladModel::new(hamiltonian, collapses, emission)?,
        sensors,
        specs,
    })
}

/// Steady-state sensor populations and their joint moment.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorMoments {
    pub populations: Vec<f64>,
    pub joint: f64,
    pub epsilons: Vec<f64>,
}

impl SensorMoments {
    /// `<Π n_i> / Π <n_i>`, refusing unresolvable populations.
    pub fn normalized_correlation(&self) -> Result<f64> {
        for (k, &p) in self.populations.iter().enumerate() {
            if !(p >= MIN_SENSOR_POPULATION) {
                return Err(Error::VanishingSensorPopulation {
                    sensor: k,
                    population: p,
                });
            }
        }
        Ok(self.joint / self.populations.iter().product::<f64>())
    }
}

/// Attach the sensors in the given order and solve for the steady state.
pub fn sensor_moments(
    model: &LindbladModel,
    specs: &[SensorSpec],
    policy: &EpsilonPolicy,
) -> Result<SensorMoments> {
    let sensed = attach_sensors_with(model, specs, policy)?;
    let rho = steady_state(&liouvillian(&sensed.model))?;
    Ok(SensorMoments {
        populations: sensed.populations(&rho)?,
        joint: sensed.joint_moment(&rho)?,
        epsilons: sensed
            .specs
            .iter()
            .map(|s| s.epsilon.unwrap_or(0.0))
            .collect(),
    })
}

fn canonical(specs: &[SensorSpec]) -> Vec<SensorSpec> {
    let mut sorted = specs.to_vec();
    sorted.sort_by(SensorSpec::canonical_cmp);
    sorted
}

fn scale_epsilon(specs: &[SensorSpec], factor: f64) -> Vec<SensorSpec> {
    specs
        .iter()
        .map(|s| s.with_epsilon(s.epsilon.expect("resolved") * factor))
        .collect()
}

/// Zero-delay filtered second-order correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilteredG2 {
    pub sensor1: SensorSpec,
    pub sensor2: SensorSpec,
    pub value: f64,
    /// Relative change of `value` under the last ε halving.
    pub epsilon_drift: f64,
    /// Coupling at which `value` was evaluated.
    pub epsilon: f64,
}

/// `g2_Γ(ω₁, ω₂) = <n₁ n₂> / (<n₁><n₂>)` at the configured ε, checked against
/// ε/2. If the drift exceeds the tolerance ε keeps being halved and the most
/// refined value is reported.
pub fn filtered_g2(
    model: &LindbladModel,
    s1: SensorSpec,
    s2: SensorSpec,
    policy: &EpsilonPolicy,
) -> Result<FilteredG2> {
    let resolved = policy.resolve(&[s1, s2])?;
    let specs = canonical(&resolved);
    let mut eps_factor = 1.0;
    let mut value = sensor_moments(model, &specs, policy)?.normalized_correlation()?;
    let mut drift = f64::NAN;
    for _ in 0..policy.max_halvings.max(1) {
        let refined_factor = eps_factor * 0.5;
        let refined = sensor_moments(model, &scale_epsilon(&specs, refined_factor), policy)?
            .normalized_correlation()?;
        drift = ((refined - value) / refined).abs();
        if drift <= policy.drift_tolerance {
            break;
        }
        eps_factor = refined_factor;
        value = refined;
    }
    Ok(FilteredG2 {
        sensor1: resolved[0],
        sensor2: resolved[1],
        value,
        epsilon_drift: drift,
        epsilon: specs[0].epsilon.expect("resolved") * eps_factor,
    })
}

/// Zero-delay filtered correlation of `n <= 3` sensors,
/// `<Π n_i> / Π <n_i>`, at the configured ε.
pub fn filtered_gn(
    model: &LindbladModel,
    specs: &[SensorSpec],
    policy: &EpsilonPolicy,
) -> Result<f64> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter("no sensors given".into()));
    }
    let specs = canonical(&policy.resolve(specs)?);
    sensor_moments(model, &specs, policy)?.normalized_correlation()
}

/// `g2_Γ(ω₁, ω₂; τ) = Tr[n₂ e^{Lτ}(ς₁ ρ ς₁^†)] / (<n₁><n₂>)`, photon at ω₁
/// detected first.
pub fn filtered_g2_tau(
    model: &LindbladModel,
    s1: SensorSpec,
    s2: SensorSpec,
    taus: &[f64],
    policy: &EpsilonPolicy,
) -> Result<G2TauResult> {
    let sensed = attach_sensors_with(model, &[s1, s2], policy)?;
    let l = liouvillian(&sensed.model);
    let rho = steady_state(&l)?;
    let pops = sensed.populations(&rho)?;
    for (k, &p) in pops.iter().enumerate() {
        if !(p >= MIN_SENSOR_POPULATION) {
            return Err(Error::VanishingSensorPopulation {
                sensor: k,
                population: p,
            });
        }
    }
    let first = &sensed.sensors[0];
    let second = &sensed.sensors[1];
    let n2 = second.adjoint().dot(second);
    let g = two_time_correlator(&l, &rho, first, &first.adjoint(), &n2, taus)?;
    let norm = pops[0] * pops[1];
    Ok(G2TauResult {
        taus: taus.to_vec(),
        values: g.iter().map(|z| z.re / norm).collect(),
    })
}

/// Spectrum seen by a single sensor of linewidth `gamma_filter` swept over
/// `grid`, normalized to unit area.
pub fn filtered_spectrum(
    model: &LindbladModel,
    gamma_filter: f64,
    grid: &[f64],
) -> Result<SpectrumResult> {
    filtered_spectrum_with(model, gamma_filter, grid, &EpsilonPolicy::default(), None)
}

pub fn filtered_spectrum_with(
    model: &LindbladModel,
    gamma_filter: f64,
    grid: &[f64],
    policy: &EpsilonPolicy,
    workers: Option<usize>,
) -> Result<SpectrumResult> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "spectrum grid needs >= 2 points".into(),
        ));
    }
    let values = parallel::map_indexed(grid.len(), workers, |k| {
        let spec = SensorSpec::new(grid[k], gamma_filter);
        sensor_moments(model, &[spec], policy).map(|m| m.populations[0])
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    SpectrumResult {
        frequencies: grid.to_vec(),
        values,
        normalization: Normalization::Raw,
        coherent_weight: 0.0,
    }
    .normalized()
}

/// Layout used by [`attach_sensors`] for a given base layout and sensor count.
pub fn sensed_layout(base: &SpaceLayout, count: usize) -> Result<SpaceLayout> {
    (0..count).try_fold(base.clone(), |l, k| l.with(&sensor_label(k), 2))
}
