//! Run configuration: `key = value` pairs in `[section]`s.
//!
//! ```text
//! [physics]
//! rabi = 20
//! [grid]
//! min = -1.5
//! max = 1.5
//! count = 101
//! units = omega_plus
//! ```
//!
//! Lines starting with `#` or `;` are comments. Command-line flags override
//! file values. Validation reports every problem found, each tagged with its
//! section, key and line.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::models::{BundleParams, RFParams, DEFAULT_GAMMA_FILTER, DEFAULT_WINDOW};
use crate::sensors::EpsilonPolicy;
use crate::sweep::{FrequencyGrid, Units};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    G2Map,
    G2Tau,
    Bundle,
    LeapfrogCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::G2Map => "g2map",
            Command::G2Tau => "g2tau",
            Command::Bundle => "bundle",
            Command::LeapfrogCheck => "leapfrog-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Command::Spectrum,
            Command::G2Map,
            Command::G2Tau,
            Command::Bundle,
            Command::LeapfrogCheck,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

/// Keys accepted in each section. `[result]` holds outputs written to the
/// manifest and is ignored on input, so a manifest replays as a config.
const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["command", "output_dir", "workers"]),
    ("physics", &["rabi", "detuning"]),
    ("grid", &["min", "max", "count", "units"]),
    ("filter", &["gamma_filter"]),
    ("tau", &["tau_max", "tau_count", "omega1", "omega2"]),
    (
        "bundle",
        &["n", "cavity_coupling", "cavity_decay", "fock_truncation"],
    ),
    (
        "epsilon",
        &[
            "default_factor",
            "max_factor",
            "drift_tolerance",
            "max_halvings",
        ],
    ),
];
const RESULT_SECTION: &str = "result";

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub section: String,
    pub key: String,
    /// `None` for command-line flags and missing keys.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.section, self.key)?;
        if let Some(l) = self.line {
            write!(f, " (line {l})")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// All validation failures of one parse.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Debug)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: Option<usize>,
}

/// Values set on the command line, in `(section, key, value)` form.
#[derive(Clone, Debug, Default)]
pub struct Overrides(Vec<(String, String, String)>);

impl Overrides {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) -> &mut Self {
        self.0
            .push((section.to_string(), key.to_string(), value.to_string()));
        self
    }

    pub fn set_opt<T: ToString>(
        &mut self,
        section: &str,
        key: &str,
        value: Option<T>,
    ) -> &mut Self {
        if let Some(v) = value {
            self.set(section, key, v);
        }
        self
    }
}

/// Time axis of delayed correlations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauGrid {
    pub max: f64,
    pub count: usize,
}

impl TauGrid {
    pub fn points(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.max * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Fully resolved and validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub physics: RFParams,
    pub grid: FrequencyGrid,
    /// `None` means an unfiltered spectrum / delay correlation.
    pub gamma_filter: Option<f64>,
    pub tau: TauGrid,
    /// Sensor frequencies for a filtered delay correlation, in grid units.
    pub tau_sensors: Option<(f64, f64)>,
    pub bundle: BundleParams,
    pub epsilon: EpsilonPolicy,
    pub output_dir: PathBuf,
    pub workers: usize,
}

fn tokenize(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Entry> {
    let mut entries = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            if section != RESULT_SECTION && !SCHEMA.iter().any(|(s, _)| *s == section) {
                errors.push(ConfigError {
                    section: section.clone(),
                    key: String::new(),
                    line: Some(lineno),
                    message: "unknown section".into(),
                });
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                section: section.clone(),
                key: line.to_string(),
                line: Some(lineno),
                message: "expected `key = value`".into(),
            });
            continue;
        };
        entries.push(Entry {
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line: Some(lineno),
        });
    }
    entries
}

struct Resolver {
    entries: Vec<Entry>,
    errors: Vec<ConfigError>,
}

impl Resolver {
    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        // later entries (flags) win
        self.entries
            .iter()
            .rev()
            .find(|e| e.section == section && e.key == key)
    }

    fn error(&mut self, section: &str, key: &str, line: Option<usize>, message: String) {
        self.errors.push(ConfigError {
            section: section.to_string(),
            key: key.to_string(),
            line,
            message,
        });
    }

    fn get<T: FromStr>(&mut self, section: &str, key: &str) -> Option<(T, Option<usize>)> {
        let e = self.entry(section, key)?.clone();
        match e.value.parse::<T>() {
            Ok(v) => Some((v, e.line)),
            Err(_) => {
                let ty = std::any::type_name::<T>()
                    .rsplit("::")
                    .next()
                    .unwrap_or("value");
                self.error(
                    section,
                    key,
                    e.line,
                    format!("cannot parse `{}` as {ty}", e.value),
                );
                None
            }
        }
    }

    /// Parsed value, or `default` when absent. Values failing `check` are
    /// reported and replaced by the default so validation can continue.
    fn value<T: FromStr + Copy>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
        check: impl Fn(T) -> Result<(), String>,
    ) -> T {
        match self.get::<T>(section, key) {
            Some((v, line)) => match check(v) {
                Ok(()) => v,
                Err(msg) => {
                    self.error(section, key, line, msg);
                    default
                }
            },
            None => default,
        }
    }

    fn optional<T: FromStr + Copy>(
        &mut self,
        section: &str,
        key: &str,
        check: impl Fn(T) -> Result<(), String>,
    ) -> Option<T> {
        let (v, line) = self.get::<T>(section, key)?;
        match check(v) {
            Ok(()) => Some(v),
            Err(msg) => {
                self.error(section, key, line, msg);
                None
            }
        }
    }
}

fn finite(v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err("must be finite".into())
    }
}

fn positive(v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

fn nonnegative(v: f64) -> Result<(), String> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

fn at_least(min: usize) -> impl Fn(usize) -> Result<(), String> {
    move |v| {
        if v >= min {
            Ok(())
        } else {
            Err(format!("must be >= {min}, got {v}"))
        }
    }
}

/// Parse and validate a configuration for `command`. `text` is the config
/// file contents, if any.
pub fn parse_config(
    command: Command,
    text: Option<&str>,
    overrides: &Overrides,
) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut entries = text.map(|t| tokenize(t, &mut errors)).unwrap_or_default();
    entries.extend(overrides.0.iter().map(|(s, k, v)| Entry {
        section: s.clone(),
        key: k.clone(),
        value: v.clone(),
        line: None,
    }));

    for e in &entries {
        if e.section == RESULT_SECTION {
            continue;
        }
        let known = SCHEMA
            .iter()
            .find(|(s, _)| *s == e.section)
            .is_some_and(|(_, keys)| keys.contains(&e.key.as_str()));
        let section_known = SCHEMA.iter().any(|(s, _)| *s == e.section);
        if !known && section_known {
            errors.push(ConfigError {
                section: e.section.clone(),
                key: e.key.clone(),
                line: e.line,
                message: "unknown key".into(),
            });
        } else if !section_known && e.section.is_empty() {
            errors.push(ConfigError {
                section: String::new(),
                key: e.key.clone(),
                line: e.line,
                message: "key outside of any section".into(),
            });
        }
    }
    for (k, e) in entries.iter().enumerate() {
        if e.line.is_some()
            && e.section != RESULT_SECTION
            && entries[..k]
                .iter()
                .any(|o| o.line.is_some() && o.section == e.section && o.key == e.key)
        {
            errors.push(ConfigError {
                section: e.section.clone(),
                key: e.key.clone(),
                line: e.line,
                message: "duplicate key".into(),
            });
        }
    }

    let mut r = Resolver { entries, errors };

    if let Some(e) = r.entry("run", "command").cloned() {
        match Command::parse(&e.value) {
            Some(c) if c == command => {}
            Some(c) => r.error(
                "run",
                "command",
                e.line,
                format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                ),
            ),
            None => r.error(
                "run",
                "command",
                e.line,
                format!("unknown command `{}`", e.value),
            ),
        }
    }

    let rabi = match r.get::<f64>("physics", "rabi") {
        Some((v, line)) => {
            if let Err(msg) = positive(v) {
                r.error("physics", "rabi", line, msg);
            }
            v
        }
        None => {
            if r.entry("physics", "rabi").is_none() {
                r.error("physics", "rabi", None, "missing required key".into());
            }
            f64::NAN
        }
    };
    let detuning = r.value("physics", "detuning", 0.0, finite);

    let default_count = match command {
        Command::Spectrum => 801,
        _ => 101,
    };
    let units = match r.entry("grid", "units").cloned() {
        Some(e) => Units::parse(&e.value).unwrap_or_else(|| {
            r.error(
                "grid",
                "units",
                e.line,
                format!("expected `gamma` or `omega_plus`, got `{}`", e.value),
            );
            Units::OmegaPlus
        }),
        None => Units::OmegaPlus,
    };
    let gmin = r.value("grid", "min", -DEFAULT_WINDOW, finite);
    let gmax = r.value("grid", "max", DEFAULT_WINDOW, finite);
    let gcount = r.value("grid", "count", default_count, at_least(2));
    if gmin >= gmax {
        let line = r.entry("grid", "max").and_then(|e| e.line);
        r.error(
            "grid",
            "max",
            line,
            format!("max ({gmax}) must exceed min ({gmin})"),
        );
    }

    let gamma_filter = r.optional("filter", "gamma_filter", positive);
    let gamma_filter = match command {
        Command::G2Map | Command::LeapfrogCheck => {
            Some(gamma_filter.unwrap_or(DEFAULT_GAMMA_FILTER))
        }
        _ => gamma_filter,
    };

    let tau_max = r.value("tau", "tau_max", 10.0, positive);
    let tau_count = r.value("tau", "tau_count", 201, at_least(2));
    let omega1 = r.optional("tau", "omega1", finite);
    let omega2 = r.optional("tau", "omega2", finite);
    let tau_sensors = match (omega1, omega2) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            r.error(
                "tau",
                "omega2",
                None,
                "omega1 and omega2 must be given together".into(),
            );
            None
        }
    };
    if command == Command::G2Tau && tau_sensors.is_some() && gamma_filter.is_none() {
        r.error(
            "filter",
            "gamma_filter",
            None,
            "filtered g2tau needs gamma_filter".into(),
        );
    }

    let defaults = BundleParams::default();
    let n = r.value("bundle", "n", defaults.n, at_least(2));
    let cavity_coupling = r.value(
        "bundle",
        "cavity_coupling",
        defaults.cavity_coupling,
        nonnegative,
    );
    let cavity_decay = r.value("bundle", "cavity_decay", defaults.cavity_decay, positive);
    let fock_truncation = r.value("bundle", "fock_truncation", 2 * n + 2, at_least(2 * n + 2));

    let ep = EpsilonPolicy::default();
    let default_factor = r.value("epsilon", "default_factor", ep.default_factor, positive);
    let max_factor = r.value("epsilon", "max_factor", ep.max_factor, positive);
    let drift_tolerance = r.value("epsilon", "drift_tolerance", ep.drift_tolerance, positive);
    let max_halvings = r.value("epsilon", "max_halvings", ep.max_halvings, |v: u32| {
        if v >= 1 {
            Ok(())
        } else {
            Err("must be >= 1".into())
        }
    });
    if default_factor > max_factor {
        let line = r.entry("epsilon", "default_factor").and_then(|e| e.line);
        r.error(
            "epsilon",
            "default_factor",
            line,
            format!("exceeds max_factor ({max_factor})"),
        );
    }

    let output_dir = r
        .entry("run", "output_dir")
        .map(|e| PathBuf::from(&e.value))
        .unwrap_or_else(|| PathBuf::from("out"));
    let workers = r.value(
        "run",
        "workers",
        crate::parallel::available_workers(),
        at_least(1),
    );

    if !r.errors.is_empty() {
        return Err(ConfigErrors(r.errors));
    }
    Ok(RunConfig {
        command,
        physics: RFParams { rabi, detuning },
        grid: FrequencyGrid {
            min: gmin,
            max: gmax,
            count: gcount,
            units,
        },
        gamma_filter,
        tau: TauGrid {
            max: tau_max,
            count: tau_count,
        },
        tau_sensors,
        bundle: BundleParams {
            n,
            cavity_coupling,
            cavity_decay,
            fock_truncation,
        },
        epsilon: EpsilonPolicy {
            default_factor,
            max_factor,
            drift_tolerance,
            max_halvings,
        },
        output_dir,
        workers,
    })
}

impl RunConfig {
    /// Render in the config dialect; `result` is appended as a `[result]`
    /// section.
    pub fn render(&self, result: &[(String, String)]) -> String {
        let mut out = String::new();
        let mut section = |name: &str, kv: &[(&str, String)]| {
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in kv {
                out.push_str(&format!("{k} = {v}\n"));
            }
        };
        section(
            "run",
            &[
                ("command", self.command.name().to_string()),
                ("output_dir", self.output_dir.display().to_string()),
                ("workers", self.workers.to_string()),
            ],
        );
        section(
            "physics",
            &[
                ("rabi", self.physics.rabi.to_string()),
                ("detuning", self.physics.detuning.to_string()),
            ],
        );
        section(
            "grid",
            &[
                ("min", self.grid.min.to_string()),
                ("max", self.grid.max.to_string()),
                ("count", self.grid.count.to_string()),
                ("units", self.grid.units.tag().to_string()),
            ],
        );
        let filter: Vec<(&str, String)> = self
            .gamma_filter
            .map(|g| vec![("gamma_filter", g.to_string())])
            .unwrap_or_default();
        section("filter", &filter);
        let mut tau = vec![
            ("tau_max", self.tau.max.to_string()),
            ("tau_count", self.tau.count.to_string()),
        ];
        if let Some((a, b)) = self.tau_sensors {
            tau.push(("omega1", a.to_string()));
            tau.push(("omega2", b.to_string()));
        }
        section("tau", &tau);
        section(
            "bundle",
            &[
                ("n", self.bundle.n.to_string()),
                ("cavity_coupling", self.bundle.cavity_coupling.to_string()),
                ("cavity_decay", self.bundle.cavity_decay.to_string()),
                ("fock_truncation", self.bundle.fock_truncation.to_string()),
            ],
        );
        section(
            "epsilon",
            &[
                ("default_factor", self.epsilon.default_factor.to_string()),
                ("max_factor", self.epsilon.max_factor.to_string()),
                ("drift_tolerance", self.epsilon.drift_tolerance.to_string()),
                ("max_halvings", self.epsilon.max_halvings.to_string()),
            ],
        );
        let result: Vec<(&str, String)> = result
            .iter()
            .map(|(k, v)| (k.as_str(), v.clone()))
            .collect();
        section(RESULT_SECTION, &result);
        out
    }
}
