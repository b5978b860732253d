//! CSV and manifest writers, and AWG waveform export.
//!
//! Every CSV starts with `# key = value` echo lines followed by a mandatory
//! header row. Floating-point cells use 17 significant digits, so values
//! round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::drive::{self, DriveConfig};
use crate::evolve::Trajectory;
use crate::lattice::ModelKind;
use crate::observables::{DosHistogram, HarmonicWork};
use crate::sweep::SweepResult;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("sample rate {rate} /µs must exceed 4× the {tone} tone frequency {freq} /µs")]
    NyquistViolation { tone: String, freq: f64, rate: f64 },
    #[error("invalid export request: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// In-memory CSV document.
#[derive(Debug, Clone, Default)]
pub struct CsvDoc {
    text: String,
    columns: usize,
}

impl CsvDoc {
    pub fn new(echo: &[(String, String)], header: &[&str]) -> Self {
        let mut text = String::new();
        for (k, v) in echo {
            let _ = writeln!(text, "# {k} = {v}");
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.columns);
        let joined: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&joined.join(","));
        self.text.push('\n');
    }

    pub fn numeric_row(&mut self, cells: &[f64]) {
        let s: Vec<String> = cells.iter().map(|&v| fmt_f64(v)).collect();
        self.row(&s);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), ExportError> {
        write_file(path, &self.text)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), ExportError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| ExportError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| ExportError::Io { path: path.to_path_buf(), source })
}

/// Parsed CSV: echo pairs, header and string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub echo: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Option<Self> {
        let mut echo = Vec::new();
        let mut lines = text.lines();
        let header = loop {
            let line = lines.next()?;
            match line.strip_prefix("# ") {
                Some(pair) => {
                    let (k, v) = pair.split_once(" = ")?;
                    echo.push((k.to_string(), v.to_string()));
                }
                None => break line.split(',').map(String::from).collect::<Vec<_>>(),
            }
        };
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Some(Self { echo, header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r.get(i)?.parse().ok()).collect()
    }

    pub fn echo_value(&self, key: &str) -> Option<&str> {
        self.echo.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 11] =
    ["t", "re_beta1", "im_beta1", "re_beta2", "im_beta2", "bx", "by", "bz", "norm", "W1", "W2"];
pub const SWEEP_COLUMNS: [&str; 8] = ["M", "phi", "slope1", "slope2", "r2_1", "r2_2", "chern", "status"];
pub const DOS_COLUMNS: [&str; 4] = ["M", "E_low", "E_high", "density"];
pub const WAVEFORM_COLUMNS: [&str; 5] = ["t", "Vx_over_V0", "Vy_over_V0", "lambda", "Delta"];

pub fn trajectory_csv(echo: &[(String, String)], traj: &Trajectory) -> CsvDoc {
    let mut doc = CsvDoc::new(echo, &TRAJECTORY_COLUMNS);
    for i in 0..traj.len {
        let a = traj.states[i].amp;
        let b = traj.bloch[i];
        doc.numeric_row(&[
            traj.times[i],
            a[0].re,
            a[0].im,
            a[1].re,
            a[1].im,
            b[0],
            b[1],
            b[2],
            traj.norm[i],
            traj.w1[i],
            traj.w2[i],
        ]);
    }
    doc
}

/// Per-tone accumulated energies, one column per tone label.
pub fn harmonics_csv(echo: &[(String, String)], hw: &HarmonicWork) -> CsvDoc {
    let mut header = vec!["t"];
    header.extend(hw.labels.iter().map(String::as_str));
    let mut doc = CsvDoc::new(echo, &header);
    for (i, &t) in hw.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(hw.energy.iter().map(|e| e[i]));
        doc.numeric_row(&row);
    }
    doc
}

pub fn sweep_csv(echo: &[(String, String)], res: &SweepResult) -> CsvDoc {
    let mut doc = CsvDoc::new(echo, &SWEEP_COLUMNS);
    for c in &res.cells {
        doc.row(&[
            fmt_f64(c.m),
            fmt_f64(c.phi),
            fmt_f64(c.fit.slope1),
            fmt_f64(c.fit.slope2),
            fmt_f64(c.fit.r2_1),
            fmt_f64(c.fit.r2_2),
            c.chern.to_string(),
            c.status.to_string(),
        ]);
    }
    doc
}

pub fn dos_csv(echo: &[(String, String)], hists: &[DosHistogram]) -> CsvDoc {
    let mut doc = CsvDoc::new(echo, &DOS_COLUMNS);
    for h in hists {
        for (i, d) in h.density.iter().enumerate() {
            doc.numeric_row(&[h.mass, h.edges[i], h.edges[i + 1], *d]);
        }
    }
    doc
}

/// Run manifest written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: std::collections::BTreeMap<String, String>,
    pub drive_frame: String,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<(), ExportError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| ExportError::Invalid(e.to_string()))?;
        text.push('\n');
        write_file(path, &text)
    }
}

/// Uniformly sampled modulation envelopes for an arbitrary waveform generator.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformFile {
    pub kind: ModelKind,
    /// Samples per µs.
    pub sample_rate: f64,
    pub duration: f64,
    pub times: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub lam: Vec<f64>,
    /// Trapezoidal running integral of λ (rad).
    pub phase: Vec<f64>,
}

impl WaveformFile {
    pub fn to_csv(&self, echo: &[(String, String)]) -> CsvDoc {
        let mut full = echo.to_vec();
        full.push(("waveform.sample_rate".into(), self.sample_rate.to_string()));
        full.push(("waveform.duration".into(), self.duration.to_string()));
        full.push(("waveform.kind".into(), self.kind.name().into()));
        let mut doc = CsvDoc::new(&full, &WAVEFORM_COLUMNS);
        for i in 0..self.times.len() {
            doc.numeric_row(&[self.times[i], self.vx[i], self.vy[i], self.lam[i], self.phase[i]]);
        }
        doc
    }
}

/// Samples the modulation at `sample_rate` per µs over `[0, duration]`.
pub fn sample_waveforms(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    sample_rate: f64,
    duration: f64,
) -> Result<WaveformFile, ExportError> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) || !(duration > 0.0 && duration.is_finite()) {
        return Err(ExportError::Invalid("sample rate and duration must be positive".into()));
    }
    for ch in drive::harmonic_table(kind) {
        let freq = ch.frequency(cfg).abs() / (2.0 * std::f64::consts::PI);
        if sample_rate <= 4.0 * freq {
            return Err(ExportError::NyquistViolation { tone: ch.label(), freq, rate: sample_rate });
        }
    }
    let n = (duration * sample_rate).floor() as usize + 1;
    let mut w = WaveformFile {
        kind,
        sample_rate,
        duration,
        times: Vec::with_capacity(n),
        vx: Vec::with_capacity(n),
        vy: Vec::with_capacity(n),
        lam: Vec::with_capacity(n),
        phase: Vec::with_capacity(n),
    };
    let mut acc = 0.0;
    for i in 0..n {
        let t = i as f64 / sample_rate;
        let m = drive::modulation(kind, cfg, phi, t);
        if let Some(&prev) = w.lam.last() {
            acc += 0.5 * (prev + m.lam) / sample_rate;
        }
        w.times.push(t);
        w.vx.push(m.vx);
        w.vy.push(m.vy);
        w.lam.push(m.lam);
        w.phase.push(acc);
    }
    Ok(w)
}

/// Samples the modulation and writes it to `path` as CSV.
pub fn export_waveforms(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    sample_rate: f64,
    duration: f64,
    path: &Path,
    echo: &[(String, String)],
) -> Result<WaveformFile, ExportError> {
    let w = sample_waveforms(kind, cfg, phi, sample_rate, duration)?;
    w.to_csv(echo).write(path)?;
    Ok(w)
}
