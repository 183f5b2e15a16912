//! Frequency-grid sweeps: the two-photon correlation map and spectra.
//!
//! Every map cell is an independent steady-state problem. Cells of the upper
//! triangle are evaluated in parallel, collected by index and mirrored, so the
//! result is identical for any worker count.

mod io;

pub use io::{
    map_metadata, read_table, render_g2_tau, render_map, render_spectrum, render_table,
    write_atomic, write_g2_tau, write_map, write_spectrum, CsvTable, Metadata, VERSION,
};

use ndarray::Array2;

use crate::dynamics::{spectrum_qrt, SpectrumResult};
use crate::error::{Error, Result};
use crate::models::{dressed_structure, rf_model, DressedStructure, RFParams};
use crate::parallel;
use crate::sensors::{filtered_g2, filtered_spectrum_with, EpsilonPolicy, SensorSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    Gamma,
    OmegaPlus,
}

impl Units {
    pub fn tag(self) -> &'static str {
        match self {
            Units::Gamma => "gamma",
            Units::OmegaPlus => "omega_plus",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gamma" => Some(Units::Gamma),
            "omega_plus" => Some(Units::OmegaPlus),
            _ => None,
        }
    }
}

/// Evenly spaced grid including both endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub units: Units,
}

impl FrequencyGrid {
    pub fn new(min: f64, max: f64, count: usize, units: Units) -> Result<Self> {
        let grid = Self {
            min,
            max,
            count,
            units,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || !(self.min < self.max) {
            return Err(Error::InvalidParameter(format!(
                "grid bounds [{}, {}] must be finite with min < max",
                self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid count {} (< 2)",
                self.count
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Point `i` in the declared units.
    pub fn point(&self, i: usize) -> f64 {
        if i == self.count - 1 {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Conversion factor from declared units to γ.
    pub fn scale(&self, omega_plus: Option<f64>) -> Result<f64> {
        match self.units {
            Units::Gamma => Ok(1.0),
            Units::OmegaPlus => omega_plus.ok_or_else(|| {
                Error::InvalidParameter("omega_plus units need the dressed splitting".into())
            }),
        }
    }

    pub fn points_in_gamma(&self, omega_plus: Option<f64>) -> Result<Vec<f64>> {
        let scale = self.scale(omega_plus)?;
        Ok(self.points().into_iter().map(|w| w * scale).collect())
    }
}

/// `g2_Γ(ω₁, ω₂)` over a square frequency grid.
#[derive(Clone, Debug)]
pub struct CorrelationMap {
    pub grid: FrequencyGrid,
    /// `values[[i, j]]` is the correlation at `(grid.point(i), grid.point(j))`.
    pub values: Array2<f64>,
    pub gamma_filter: f64,
    pub params: RFParams,
    pub policy: EpsilonPolicy,
    pub omega_plus: f64,
    pub epsilon_drift_max: f64,
    /// Number of filtered-g2 evaluations performed.
    pub evaluations: usize,
}

impl CorrelationMap {
    /// Grid index closest to `omega`, given in the grid's declared units.
    pub fn nearest_index(&self, omega: f64) -> usize {
        let k = ((omega - self.grid.min) / self.grid.step()).round();
        k.clamp(0.0, (self.grid.count - 1) as f64) as usize
    }

    pub fn value_near(&self, omega1: f64, omega2: f64) -> f64 {
        self.values[[self.nearest_index(omega1), self.nearest_index(omega2)]]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Upper-triangle cell coordinates `(i, j)` with `i <= j`, row-major.
fn upper_triangle(count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .flat_map(|i| (i..count).map(move |j| (i, j)))
        .collect()
}

/// Two-photon correlation map with the default coupling policy.
pub fn g2_map(
    p: &RFParams,
    grid: &FrequencyGrid,
    gamma_filter: f64,
    workers: usize,
) -> Result<CorrelationMap> {
    g2_map_with(
        p,
        grid,
        gamma_filter,
        Some(workers),
        &EpsilonPolicy::default(),
    )
}

/// `workers = None` runs on the ambient rayon pool.
pub fn g2_map_with(
    p: &RFParams,
    grid: &FrequencyGrid,
    gamma_filter: f64,
    workers: Option<usize>,
    policy: &EpsilonPolicy,
) -> Result<CorrelationMap> {
    let (structure, freqs) = map_setup(p, grid, gamma_filter)?;
    let model = rf_model(p)?;
    let cells = upper_triangle(grid.count);
    let results = parallel::map_indexed(cells.len(), workers, |k| {
        let (i, j) = cells[k];
        filtered_g2(
            &model,
            SensorSpec::new(freqs[i], gamma_filter),
            SensorSpec::new(freqs[j], gamma_filter),
            policy,
        )
    });
    assemble(p, grid, gamma_filter, policy, &structure, &cells, results)
}

/// Reference implementation on the calling thread, independent of rayon.
pub fn g2_map_sequential(
    p: &RFParams,
    grid: &FrequencyGrid,
    gamma_filter: f64,
    policy: &EpsilonPolicy,
) -> Result<CorrelationMap> {
    let (structure, freqs) = map_setup(p, grid, gamma_filter)?;
    let model = rf_model(p)?;
    let cells = upper_triangle(grid.count);
    let results = parallel::map_sequential(cells.len(), |k| {
        let (i, j) = cells[k];
        filtered_g2(
            &model,
            SensorSpec::new(freqs[i], gamma_filter),
            SensorSpec::new(freqs[j], gamma_filter),
            policy,
        )
    });
    assemble(p, grid, gamma_filter, policy, &structure, &cells, results)
}

fn map_setup(
    p: &RFParams,
    grid: &FrequencyGrid,
    gamma_filter: f64,
) -> Result<(DressedStructure, Vec<f64>)> {
    grid.validate()?;
    if !(gamma_filter > 0.0) || !gamma_filter.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma_filter = {gamma_filter}"
        )));
    }
    let structure = dressed_structure(p)?;
    let freqs = grid.points_in_gamma(Some(structure.splitting))?;
    Ok((structure, freqs))
}

fn assemble(
    p: &RFParams,
    grid: &FrequencyGrid,
    gamma_filter: f64,
    policy: &EpsilonPolicy,
    structure: &DressedStructure,
    cells: &[(usize, usize)],
    results: Vec<Result<crate::sensors::FilteredG2>>,
) -> Result<CorrelationMap> {
    let n = grid.count;
    let mut values = Array2::zeros((n, n));
    let mut drift_max: f64 = 0.0;
    for (&(i, j), r) in cells.iter().zip(results) {
        let g = r.map_err(|e| Error::Cell {
            i,
            j,
            source: Box::new(e),
        })?;
        values[[i, j]] = g.value;
        values[[j, i]] = g.value;
        drift_max = drift_max.max(g.epsilon_drift);
    }
    Ok(CorrelationMap {
        grid: *grid,
        values,
        gamma_filter,
        params: *p,
        policy: *policy,
        omega_plus: structure.splitting,
        epsilon_drift_max: drift_max,
        evaluations: cells.len(),
    })
}

/// Emission spectrum on `grid`: exact pole expansion when `gamma_filter` is
/// `None`, single-sensor filtered spectrum otherwise. Frequencies are returned
/// in the grid's declared units and the area is normalized in those units.
pub fn spectrum_sweep(
    p: &RFParams,
    grid: &FrequencyGrid,
    gamma_filter: Option<f64>,
    workers: Option<usize>,
) -> Result<SpectrumResult> {
    grid.validate()?;
    let omega_plus = match grid.units {
        Units::OmegaPlus => Some(dressed_structure(p)?.splitting),
        Units::Gamma => None,
    };
    let freqs = grid.points_in_gamma(omega_plus)?;
    let model = rf_model(p)?;
    let result = match gamma_filter {
        None => spectrum_qrt(&model, &freqs)?,
        Some(g) => filtered_spectrum_with(&model, g, &freqs, &EpsilonPolicy::default(), workers)?,
    };
    // the elastic weight is a fraction of the area and must not rescale
    // with the frequency units
    let fraction = result.coherent_weight / result.area();
    let mut out = SpectrumResult {
        frequencies: grid.points(),
        ..result
    }
    .normalized()?;
    out.coherent_weight = fraction;
    Ok(out)
}
