//! CSV output.
//!
//! Files start with `# key=value` metadata lines, followed by a header row and
//! the data rows. Numbers are printed with the shortest decimal
//! representation that round-trips to the same binary64 value. Files are
//! written to a temporary sibling and renamed into place, so a file at the
//! target path is always complete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::CorrelationMap;
use crate::dynamics::{G2TauResult, SpectrumResult};
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered `key=value` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn render(&self, out: &mut String) {
        for (k, v) in &self.0 {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
}

/// Write via a temporary sibling and rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Metadata block shared by map files.
pub fn map_metadata(map: &CorrelationMap) -> Metadata {
    let mut m = Metadata::new();
    m.push("photocorr_version", VERSION)
        .push("kind", "g2map")
        .push("rabi", map.params.rabi)
        .push("detuning", map.params.detuning)
        .push("gamma_filter", map.gamma_filter)
        .push("omega_plus", map.omega_plus)
        .push("units", map.grid.units.tag())
        .push("grid_min", map.grid.min)
        .push("grid_max", map.grid.max)
        .push("grid_count", map.grid.count)
        .push("epsilon_default_factor", map.policy.default_factor)
        .push("epsilon_max_factor", map.policy.max_factor)
        .push("epsilon_drift_tolerance", map.policy.drift_tolerance)
        .push("epsilon_max_halvings", map.policy.max_halvings)
        .push("epsilon_drift_max", map.epsilon_drift_max);
    m
}

/// Metadata lines, a header row and comma-separated rows.
pub fn render_table(metadata: &Metadata, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    metadata.render(&mut out);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Map file: header `omega1,omega2,g2`, `count^2` rows with `i` outer.
pub fn render_map(map: &CorrelationMap) -> String {
    let pts = map.grid.points();
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .enumerate()
        .flat_map(|(i, &w1)| {
            pts.iter()
                .enumerate()
                .map(move |(j, &w2)| vec![w1, w2, map.values[[i, j]]])
        })
        .collect();
    render_table(&map_metadata(map), &["omega1", "omega2", "g2"], &rows)
}

pub fn write_map(map: &CorrelationMap, path: &Path) -> Result<()> {
    write_atomic(path, &render_map(map))
}

/// Spectrum file: header `omega,S`.
pub fn render_spectrum(result: &SpectrumResult, metadata: &Metadata) -> String {
    let mut meta = Metadata::new();
    meta.push("photocorr_version", VERSION)
        .push("kind", "spectrum")
        .push("normalization", result.normalization.tag())
        .push("coherent_weight", result.coherent_weight);
    meta.0.extend(metadata.0.iter().cloned());
    let rows: Vec<Vec<f64>> = result
        .frequencies
        .iter()
        .zip(&result.values)
        .map(|(&w, &s)| vec![w, s])
        .collect();
    render_table(&meta, &["omega", "S"], &rows)
}

pub fn write_spectrum(result: &SpectrumResult, metadata: &Metadata, path: &Path) -> Result<()> {
    write_atomic(path, &render_spectrum(result, metadata))
}

/// Delay file: header `tau,g2`.
pub fn render_g2_tau(result: &G2TauResult, metadata: &Metadata) -> String {
    let mut meta = Metadata::new();
    meta.push("photocorr_version", VERSION)
        .push("kind", "g2tau");
    meta.0.extend(metadata.0.iter().cloned());
    let rows: Vec<Vec<f64>> = result
        .taus
        .iter()
        .zip(&result.values)
        .map(|(&t, &g)| vec![t, g])
        .collect();
    render_table(&meta, &["tau", "g2"], &rows)
}

pub fn write_g2_tau(result: &G2TauResult, metadata: &Metadata, path: &Path) -> Result<()> {
    write_atomic(path, &render_g2_tau(result, metadata))
}

/// Parsed CSV file in the dialect written above.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub metadata: Metadata,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Read a file written by this module. Errors name the offending line.
pub fn read_table(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: String| {
        Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("line {line}: {msg}"),
            ),
        )
    };
    let mut metadata = Metadata::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_some() {
                return Err(bad(lineno, "metadata after header".into()));
            }
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| bad(lineno, "metadata line without `=`".into()))?;
            metadata.push(k.trim(), v.trim());
            continue;
        }
        match &header {
            None => {
                if line.split(',').any(|f| f.trim().parse::<f64>().is_ok()) {
                    return Err(bad(lineno, "missing header row".into()));
                }
                header = Some(line.split(',').map(str::to_string).collect());
            }
            Some(h) => {
                let row = line
                    .split(',')
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|e| bad(lineno, e.to_string()))?;
                if row.len() != h.len() {
                    return Err(bad(
                        lineno,
                        format!("{} fields, header has {}", row.len(), h.len()),
                    ));
                }
                rows.push(row);
            }
        }
    }
    let header = header.ok_or_else(|| bad(text.lines().count(), "missing header row".into()))?;
    Ok(CsvTable {
        metadata,
        header,
        rows,
    })
}
