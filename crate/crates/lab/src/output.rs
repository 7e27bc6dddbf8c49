//! File formats. Diagnostics and ground-state profiles are CSV under a `#`
//! manifest header; sweep summaries are JSON lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nls_core::ground_state::GroundStateProfile;
use nls_core::integrator::DiagnosticsRecord;
use nls_core::spectral::Blend;
use serde::Serialize;
use thiserror::Error;

use crate::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: bad value in row {row}, column '{column}'")]
    BadValue { path: PathBuf, row: usize, column: String },
    #[error("cannot serialize summary: {0}")]
    Json(#[from] serde_json::Error),
}

/// Column names in record order.
pub const COLUMNS: [&str; 10] = [
    "t",
    "mass",
    "hamiltonian",
    "lyapunov",
    "modified_hamiltonian",
    "modified_lyapunov",
    "sobolev_norm",
    "distance",
    "commutator_residual",
    "tail_fraction",
];

/// Ordered `key = value` pairs written as `# key = value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    /// Full configuration plus code version and multiplier blend.
    pub fn for_run(experiment: &str, config: &ExperimentConfig) -> Self {
        let mut m = Self::default();
        m.push("experiment", experiment);
        m.push("version", crate::VERSION);
        m.push("blend", Blend::default().identifier());
        for (key, value) in config.entries() {
            m.push(key, value);
        }
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }

    fn as_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().cloned().collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Shortest round-trip decimal form; empty for a missing optional.
fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_diagnostics_csv(
    path: &Path,
    manifest: &Manifest,
    records: &[DiagnosticsRecord],
) -> Result<(), OutputError> {
    let mut out = create(path)?;
    manifest.write_to(&mut out).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(COLUMNS).map_err(csv_err(path))?;
    for r in records {
        writer
            .write_record([
                cell(Some(r.t)),
                cell(Some(r.mass)),
                cell(Some(r.hamiltonian)),
                cell(Some(r.lyapunov)),
                cell(Some(r.modified_hamiltonian)),
                cell(Some(r.modified_lyapunov)),
                cell(Some(r.sobolev_norm)),
                cell(r.distance),
                cell(r.commutator),
                cell(Some(r.tail_fraction)),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn read_manifest(path: &Path) -> Result<Manifest, OutputError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut manifest = Manifest::default();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.split_once('=') {
            manifest.push(k.trim(), v.trim());
        }
    }
    Ok(manifest)
}

pub fn read_diagnostics_csv(path: &Path) -> Result<(Manifest, Vec<DiagnosticsRecord>), OutputError> {
    let manifest = read_manifest(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let mut position = [0usize; COLUMNS.len()];
    for (slot, column) in position.iter_mut().zip(COLUMNS) {
        *slot = headers.iter().position(|h| h == column).ok_or_else(|| OutputError::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })?;
    }
    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result.map_err(csv_err(path))?;
        let value = |c: usize| -> Result<Option<f64>, OutputError> {
            let text = rec.get(position[c]).unwrap_or("");
            if text.is_empty() {
                return Ok(None);
            }
            text.parse().map(Some).map_err(|_| OutputError::BadValue {
                path: path.to_path_buf(),
                row: row + 1,
                column: COLUMNS[c].to_string(),
            })
        };
        let required = |c: usize| -> Result<f64, OutputError> {
            value(c)?.ok_or_else(|| OutputError::BadValue {
                path: path.to_path_buf(),
                row: row + 1,
                column: COLUMNS[c].to_string(),
            })
        };
        records.push(DiagnosticsRecord {
            t: required(0)?,
            mass: required(1)?,
            hamiltonian: required(2)?,
            lyapunov: required(3)?,
            modified_hamiltonian: required(4)?,
            modified_lyapunov: required(5)?,
            sobolev_norm: required(6)?,
            distance: value(7)?,
            commutator: value(8)?,
            tail_fraction: required(9)?,
        });
    }
    Ok((manifest, records))
}

/// JSON-lines file: the manifest as the first object, then
/// one object per item.
pub fn write_summary<T: Serialize>(
    path: &Path,
    manifest: &Manifest,
    items: &[T],
) -> Result<(), OutputError> {
    let mut out = create(path)?;
    let header = serde_json::json!({ "manifest": manifest.as_map() });
    writeln!(out, "{}", serde_json::to_string(&header)?).map_err(io_err(path))?;
    for item in items {
        writeln!(out, "{}", serde_json::to_string(item)?).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<serde_json::Value>, OutputError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(OutputError::from))
        .collect()
}

/// Profile as `r,Q` rows every `stride` mesh points, with the manifest
/// carrying `Q(0)`, the mesh step and the ODE residual.
pub fn write_ground_state(
    path: &Path,
    manifest: &Manifest,
    profile: &GroundStateProfile,
    stride: usize,
) -> Result<(), OutputError> {
    let manifest = manifest
        .clone()
        .with("q0", profile.q0())
        .with("mesh_step", profile.step())
        .with("r_max", profile.r_max())
        .with("ode_residual", profile.residual());
    let mut out = create(path)?;
    manifest.write_to(&mut out).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["r", "Q"]).map_err(csv_err(path))?;
    let stride = stride.max(1);
    let samples = profile.samples();
    for (i, q) in samples.iter().enumerate() {
        if i % stride == 0 || i + 1 == samples.len() {
            let r = i as f64 * profile.step();
            writer.write_record([r.to_string(), q.to_string()]).map_err(csv_err(path))?;
        }
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}
