use std::fmt::Write as _;
use std::fs;
use std::time::Instant;

use super::config::{Command, RunConfig};
use super::exit;
use crate::dynamics::g2_tau_unfiltered;
use crate::error::Error;
use crate::models::{bundle_comparison, dressed_structure, leapfrog_lines, rf_model, BundleParams};
use crate::parallel;
use crate::sensors::{filtered_g2, filtered_g2_tau, SensorSpec};
use crate::sweep::{
    g2_map_with, render_g2_tau, render_map, render_spectrum, render_table, spectrum_sweep,
    write_atomic, Metadata, Units, VERSION,
};

/// File name of the run manifest inside the output directory.
pub const MANIFEST: &str = "manifest";

/// Samples per leapfrog line in `leapfrog-check`.
const LEAPFROG_SAMPLES: usize = 5;

/// Results of a command before anything is written.
#[derive(Clone, Debug)]
pub struct Outcome {
    /// `(file name, contents)` of the data files.
    pub files: Vec<(String, String)>,
    /// Entries of the manifest `[result]` section.
    pub result: Vec<(String, String)>,
    /// Human-readable summary for stdout.
    pub report: String,
    pub check_passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            result: Vec::new(),
            report: String::new(),
            check_passed: true,
        }
    }

    fn record(&mut self, key: &str, value: impl ToString) {
        self.result.push((key.to_string(), value.to_string()));
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub report: String,
    pub wall_time: f64,
}

#[derive(Debug)]
pub struct RunFailure {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidLayout(_)
        | Error::UnknownLabel(_)
        | Error::DimMismatch { .. }
        | Error::LayoutMismatch
        | Error::InvalidModel(_)
        | Error::InvalidParameter(_)
        | Error::DimensionBudget(_)
        | Error::Regime(_)
        | Error::Truncation { .. } => exit::MODEL,
        Error::DegenerateSteadyState { .. }
        | Error::SteadyState(_)
        | Error::Eigen { .. }
        | Error::ZeroPopulation { .. }
        | Error::VanishingSensorPopulation { .. } => exit::NUMERICAL,
        Error::Cell { source, .. } => exit_code_for(source),
        Error::Io { .. } => exit::IO,
    }
}

fn base_metadata(cfg: &RunConfig, omega_plus: Option<f64>) -> Metadata {
    let mut m = Metadata::new();
    m.push("rabi", cfg.physics.rabi)
        .push("detuning", cfg.physics.detuning);
    if let Some(w) = omega_plus {
        m.push("omega_plus", w);
    }
    m
}

/// Ω₊ when the drive is in the triplet regime. Grids in Ω₊ units require it.
fn splitting(cfg: &RunConfig) -> crate::Result<Option<f64>> {
    match dressed_structure(&cfg.physics) {
        Ok(s) => Ok(Some(s.splitting)),
        Err(e) if cfg.grid.units == Units::OmegaPlus => Err(e),
        Err(_) => Ok(None),
    }
}

fn spectrum(cfg: &RunConfig) -> crate::Result<Outcome> {
    let mut out = Outcome::new();
    let omega_plus = splitting(cfg)?;
    let result = spectrum_sweep(&cfg.physics, &cfg.grid, cfg.gamma_filter, Some(cfg.workers))?;
    let mut meta = base_metadata(cfg, omega_plus);
    meta.push("units", cfg.grid.units.tag()).push(
        "gamma_filter",
        cfg.gamma_filter
            .map_or("none".to_string(), |g| g.to_string()),
    );
    if let Some(g) = cfg.gamma_filter {
        let eps = cfg.epsilon.default_epsilon(&[SensorSpec::new(0.0, g)]);
        meta.push("epsilon", eps);
        out.record("epsilon", eps);
    }
    out.files
        .push(("spectrum.csv".into(), render_spectrum(&result, &meta)));

    let maxima: Vec<f64> = result
        .local_maxima()
        .into_iter()
        .map(|k| result.frequencies[k])
        .collect();
    if let Some(w) = omega_plus {
        out.record("omega_plus", w);
    }
    out.record("local_maxima", maxima.len());
    out.record("coherent_weight", result.coherent_weight);
    let _ = writeln!(
        out.report,
        "spectrum: {} points, {} local maxima at {:?} ({})",
        result.values.len(),
        maxima.len(),
        maxima,
        cfg.grid.units.tag()
    );
    Ok(out)
}

fn g2map(cfg: &RunConfig) -> crate::Result<Outcome> {
    let mut out = Outcome::new();
    let gamma = cfg.gamma_filter.expect("g2map has a filter width");
    let map = g2_map_with(
        &cfg.physics,
        &cfg.grid,
        gamma,
        Some(cfg.workers),
        &cfg.epsilon,
    )?;
    out.files.push(("g2map.csv".into(), render_map(&map)));
    let eps = cfg.epsilon.default_epsilon(&[SensorSpec::new(0.0, gamma)]);
    out.record("omega_plus", map.omega_plus);
    out.record("epsilon", eps);
    out.record("epsilon_drift_max", map.epsilon_drift_max);
    out.record("evaluations", map.evaluations);
    let _ = writeln!(
        out.report,
        "g2map: {0}x{0} grid, {1} evaluations, min g2 = {2:.4}, max epsilon drift = {3:.2e}",
        cfg.grid.count,
        map.evaluations,
        map.min_value(),
        map.epsilon_drift_max
    );
    Ok(out)
}

fn g2tau(cfg: &RunConfig) -> crate::Result<Outcome> {
    let mut out = Outcome::new();
    let taus = cfg.tau.points();
    let model = rf_model(&cfg.physics)?;
    let mut meta;
    let result = match cfg.tau_sensors {
        Some((w1, w2)) => {
            let omega_plus = splitting(cfg)?;
            let scale = cfg.grid.scale(omega_plus)?;
            let gamma = cfg.gamma_filter.expect("validated with sensors");
            let s1 = SensorSpec::new(w1 * scale, gamma);
            let s2 = SensorSpec::new(w2 * scale, gamma);
            let eps = cfg.epsilon.default_epsilon(&[s1, s2]);
            meta = base_metadata(cfg, omega_plus);
            meta.push("units", cfg.grid.units.tag())
                .push("omega1", w1)
                .push("omega2", w2)
                .push("gamma_filter", gamma)
                .push("epsilon", eps);
            if let Some(w) = omega_plus {
                out.record("omega_plus", w);
            }
            out.record("epsilon", eps);
            filtered_g2_tau(&model, s1, s2, &taus, &cfg.epsilon)?
        }
        None => {
            meta = base_metadata(
                cfg,
                dressed_structure(&cfg.physics).ok().map(|s| s.splitting),
            );
            meta.push("gamma_filter", "none");
            g2_tau_unfiltered(&model, &taus)?
        }
    };
    out.files
        .push(("g2tau.csv".into(), render_g2_tau(&result, &meta)));
    out.record("g2_zero", result.values[0]);
    out.record("tail_deviation", result.tail_deviation());
    let _ = writeln!(
        out.report,
        "g2tau: {} delays up to {}, g2(0) = {:.6e}, |g2(tau_max) - 1| = {:.3e}",
        taus.len(),
        cfg.tau.max,
        result.values[0],
        result.tail_deviation()
    );
    Ok(out)
}

fn bundle(cfg: &RunConfig) -> crate::Result<Outcome> {
    let mut out = Outcome::new();
    let b: BundleParams = cfg.bundle;
    let cmp = bundle_comparison(&cfg.physics, &b)?;
    let model = crate::models::bundle_model(&cfg.physics, &b)?;
    let result = g2_tau_unfiltered(&model, &cfg.tau.points())?;
    let mut meta = base_metadata(cfg, Some(cmp.reference_frequency));
    meta.push("observable", "cavity")
        .push("n", b.n)
        .push("cavity_frequency", cmp.cavity_frequency)
        .push("cavity_coupling", b.cavity_coupling)
        .push("cavity_decay", b.cavity_decay)
        .push("fock_truncation", b.fock_truncation);
    out.files
        .push(("bundle.csv".into(), render_g2_tau(&result, &meta)));
    out.record("omega_plus", cmp.reference_frequency);
    out.record("cavity_frequency", cmp.cavity_frequency);
    out.record("g2_zero", cmp.g2_zero);
    out.record("reference_g2_zero", cmp.reference_g2_zero);
    out.record("cavity_population", cmp.cavity_population);
    out.record("truncation_change", cmp.truncation_change());
    let _ = writeln!(
        out.report,
        "bundle: cavity at {:.6} (Omega+/{}): g2(0) = {:.6}; cavity at Omega+: g2(0) = {:.6}; \
         truncation doubling changes population by {:.2e}",
        cmp.cavity_frequency,
        b.n,
        cmp.g2_zero,
        cmp.reference_g2_zero,
        cmp.truncation_change()
    );
    Ok(out)
}

fn leapfrog_check(cfg: &RunConfig) -> crate::Result<Outcome> {
    let mut out = Outcome::new();
    let gamma = cfg.gamma_filter.expect("leapfrog-check has a filter width");
    let structure = dressed_structure(&cfg.physics)?;
    let lines = leapfrog_lines(&cfg.physics)?;
    let scale = cfg.grid.scale(Some(structure.splitting))?;
    let half_width = cfg.grid.min.abs().max(cfg.grid.max.abs()) * scale;
    let samples: Vec<(f64, f64, f64)> = lines
        .iter()
        .flat_map(|line| {
            line.off_peak_samples(&structure, half_width, 2.0 * gamma, LEAPFROG_SAMPLES)
                .into_iter()
                .map(move |(w1, w2)| (line.sum, w1, w2))
        })
        .collect();
    let model = rf_model(&cfg.physics)?;
    let values = parallel::map_indexed(samples.len(), Some(cfg.workers), |k| {
        let (_, w1, w2) = samples[k];
        filtered_g2(
            &model,
            SensorSpec::new(w1, gamma),
            SensorSpec::new(w2, gamma),
            &cfg.epsilon,
        )
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;

    let _ = writeln!(
        out.report,
        "predicted leapfrog sums ({}): {:?}",
        cfg.grid.units.tag(),
        structure.leapfrog_sums.map(|s| s / scale)
    );
    let mut rows = Vec::new();
    let mut drift_max: f64 = 0.0;
    for (&(sum, w1, w2), g) in samples.iter().zip(&values) {
        let _ = writeln!(
            out.report,
            "  sum {:+.4}: g2({:+.4}, {:+.4}) = {:.4}",
            sum / scale,
            w1 / scale,
            w2 / scale,
            g.value
        );
        rows.push(vec![sum / scale, w1 / scale, w2 / scale, g.value]);
        drift_max = drift_max.max(g.epsilon_drift);
    }
    out.check_passed = values.iter().all(|g| g.value > 1.0) && !values.is_empty();
    let _ = writeln!(
        out.report,
        "leapfrog-check: {}",
        if out.check_passed {
            "all sampled values > 1"
        } else {
            "FAILED"
        }
    );

    let mut meta = base_metadata(cfg, Some(structure.splitting));
    meta.push("units", cfg.grid.units.tag())
        .push("gamma_filter", gamma)
        .push("exclusion_radius", 2.0 * gamma);
    out.files.push((
        "leapfrog.csv".into(),
        render_table(&meta, &["line_sum", "omega1", "omega2", "g2"], &rows),
    ));
    let eps = cfg.epsilon.default_epsilon(&[SensorSpec::new(0.0, gamma)]);
    out.record("omega_plus", structure.splitting);
    out.record("epsilon", eps);
    out.record("epsilon_drift_max", drift_max);
    out.record("check_passed", out.check_passed);
    Ok(out)
}

/// Compute the outputs of `cfg` without touching the file system.
pub fn execute(cfg: &RunConfig) -> crate::Result<Outcome> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::G2Map => g2map(cfg),
        Command::G2Tau => g2tau(cfg),
        Command::Bundle => bundle(cfg),
        Command::LeapfrogCheck => leapfrog_check(cfg),
    }
}

/// Compute, then write data files and the manifest into `cfg.output_dir`.
/// Nothing is written unless the computation succeeds.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunFailure> {
    let start = Instant::now();
    let fail = |e: Error| RunFailure {
        code: exit_code_for(&e),
        message: e.to_string(),
    };
    let mut outcome = execute(cfg).map_err(fail)?;
    let wall_time = start.elapsed().as_secs_f64();

    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        fail(Error::Io {
            path: cfg.output_dir.clone(),
            source: e,
        })
    })?;
    for (name, contents) in &outcome.files {
        write_atomic(&cfg.output_dir.join(name), contents).map_err(fail)?;
    }
    let mut result = vec![
        ("version".to_string(), VERSION.to_string()),
        (
            "files".to_string(),
            outcome
                .files
                .iter()
                .map(|(n, _)| n.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        ),
    ];
    result.append(&mut outcome.result);
    result.push(("wall_time_s".into(), format!("{wall_time:.3}")));
    write_atomic(&cfg.output_dir.join(MANIFEST), &cfg.render(&result)).map_err(fail)?;

    if !outcome.check_passed {
        return Err(RunFailure {
            code: exit::CHECK_FAILED,
            message: format!("{}check failed", outcome.report),
        });
    }
    Ok(RunSummary {
        report: outcome.report,
        wall_time,
    })
}
