//! (M, φ) phase-diagram sweeps: one full evolution per cell, run on a
//! bounded worker pool, each cell compared with the band Chern number.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drive::{self, DriveConfig, GOLDEN_RATIO};
use crate::evolve::{self, DissipationConfig, Schedule};
use crate::lattice::{self, ModelKind};
use crate::observables::{self, SlopeFit, DEFAULT_WINDOW_START};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "FLOQUET_WORKERS";
/// Ω₂/Ω₁ of the commensurate control (Ω₁/Ω₂ = 3/2).
pub const COMMENSURATE_RATIO: f64 = 2.0 / 3.0;
/// Grid used for the per-cell Chern number.
pub const DEFAULT_ORACLE_GRID: usize = 48;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Conservative,
    DrivenDissipative,
}

impl std::str::FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "conservative" => Ok(Self::Conservative),
            "driven-dissipative" | "dd" | "dissipative" => Ok(Self::DrivenDissipative),
            other => Err(format!("unknown sweep mode `{other}`")),
        }
    }
}

impl std::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Conservative => "conservative",
            Self::DrivenDissipative => "driven-dissipative",
        })
    }
}

/// Inclusive, evenly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: ModelKind,
    pub m_range: Axis,
    pub phi_range: Axis,
    pub mode: SweepMode,
    /// Ω₂/Ω₁.
    pub ratio: f64,
    /// Ω₁, θ₀ and Ω_R shared by every cell; `omega2` and `delta` are set per cell.
    pub base: DriveConfig,
    pub dissipation: DissipationConfig,
    /// Horizon in periods of the slower drive.
    pub periods: f64,
    /// Step; the per-cell default when `None`.
    pub dt: Option<f64>,
    pub decimate: Option<usize>,
    pub window_start: f64,
    pub oracle_grid: usize,
    /// Worker count; `FLOQUET_WORKERS` or the available parallelism when `None`.
    pub workers: Option<usize>,
}

impl SweepSpec {
    /// `M ∈ [−6, 6]`, `φ ∈ [−π, π]`, golden-ratio drives, 30 slow periods.
    pub fn reference(kind: ModelKind, n_m: usize, n_phi: usize, mode: SweepMode) -> Self {
        let base = DriveConfig::reference(0.0);
        Self {
            kind,
            m_range: Axis::new(-6.0, 6.0, n_m),
            phi_range: Axis::new(-std::f64::consts::PI, std::f64::consts::PI, n_phi),
            mode,
            ratio: GOLDEN_RATIO,
            dissipation: DissipationConfig::reference(base.omega_r),
            base,
            periods: 30.0,
            dt: None,
            decimate: None,
            window_start: DEFAULT_WINDOW_START,
            oracle_grid: DEFAULT_ORACLE_GRID,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::Invalid(m.to_string()));
        for (name, axis) in [("m_range", &self.m_range), ("phi_range", &self.phi_range)] {
            if axis.n < 2 {
                return bad(&format!("{name} needs at least 2 points"));
            }
            if !(axis.min.is_finite() && axis.max.is_finite()) || axis.max <= axis.min {
                return bad(&format!("{name} must be a finite increasing range"));
            }
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return bad("ratio must be positive");
        }
        if !(self.periods > 0.0 && self.periods.is_finite()) {
            return bad("periods must be positive");
        }
        if !(0.0..1.0).contains(&self.window_start) {
            return bad("window_start must lie in [0, 1)");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        if self.oracle_grid < 16 {
            return bad("oracle_grid must be at least 16");
        }
        self.base.validate().map_err(SweepError::Invalid)?;
        self.dissipation.validate().map_err(SweepError::Invalid)
    }

    /// Drive configuration of the cell at mass `m`.
    pub fn cell_drive(&self, m: f64) -> DriveConfig {
        DriveConfig { omega2: self.ratio * self.base.omega1, ..self.base }.with_mass(m)
    }

    pub fn cell_schedule(&self, cfg: &DriveConfig, phi: f64) -> Schedule {
        let auto = Schedule::periods(self.kind, cfg, phi, self.periods);
        let dt = self.dt.unwrap_or(auto.dt);
        let decimate = self.decimate.unwrap_or_else(|| evolve::default_decimation(dt));
        Schedule::new(auto.duration, dt, decimate)
    }

    fn worker_count(&self) -> usize {
        self.workers
            .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0))
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    GapClosed,
    NumericalFailure,
}

impl std::fmt::Display for CellStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ok => "ok",
            Self::GapClosed => "gap-closed",
            Self::NumericalFailure => "numerical-failure",
        })
    }
}

/// Chern number of the synthesized `H(θ)`, or a boundary marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellChern {
    Value(i32),
    Boundary,
}

impl std::fmt::Display for CellChern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Value(c) => write!(f, "{c}"),
            Self::Boundary => f.write_str("boundary"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub m: f64,
    pub phi: f64,
    /// NaN slopes when the evolution failed.
    pub fit: SlopeFit,
    pub chern: CellChern,
    /// Chern number even where the cell is flagged as boundary, if computable.
    pub raw_chern: Option<i32>,
    pub status: CellStatus,
}

impl SweepCell {
    pub fn is_boundary(&self) -> bool {
        self.chern == CellChern::Boundary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Row-major over `(m, phi)`: `cells[i_m·n_phi + i_phi]`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i_m: usize, i_phi: usize) -> &SweepCell {
        &self.cells[i_m * self.spec.phi_range.n + i_phi]
    }
}

/// Whether `|M|` lies within one M-grid step of the phase boundary at `φ`.
pub fn is_boundary_cell(kind: ModelKind, m: f64, phi: f64, m_step: f64) -> bool {
    let (mb, _) = lattice::phase_boundary(kind, phi);
    (m.abs() - mb.abs()).abs() <= m_step
}

/// Chern number of the lower band of `H(θ)` over the BZ.
pub fn synthesized_chern(kind: ModelKind, cfg: &DriveConfig, phi: f64, grid_n: usize) -> Result<i32, lattice::LatticeError> {
    lattice::chern_number(drive::theta_map(kind, *cfg, phi), &lattice::geometry(kind), grid_n)
}

fn nan_fit(window: f64) -> SlopeFit {
    SlopeFit { slope1: f64::NAN, slope2: f64::NAN, r2_1: f64::NAN, r2_2: f64::NAN, window }
}

/// Evolution and slope fit of one cell.
pub fn run_cell(spec: &SweepSpec, m: f64, phi: f64) -> SweepCell {
    let cfg = spec.cell_drive(m);
    let schedule = spec.cell_schedule(&cfg, phi);
    let oracle = synthesized_chern(spec.kind, &cfg, phi, spec.oracle_grid);
    let boundary = is_boundary_cell(spec.kind, m, phi, spec.m_range.step());
    let raw_chern = oracle.as_ref().ok().copied();
    let chern = match raw_chern {
        Some(c) if !boundary => CellChern::Value(c),
        _ => CellChern::Boundary,
    };
    let traj = match spec.mode {
        SweepMode::Conservative => evolve::evolve_conservative(spec.kind, &cfg, phi, schedule),
        SweepMode::DrivenDissipative => {
            evolve::evolve_driven_dissipative(spec.kind, &cfg, phi, &spec.dissipation, schedule)
        }
    };
    let fit = traj
        .ok()
        .and_then(|t| observables::work_done(&t, spec.kind, &cfg, phi).ok())
        .and_then(|ws| observables::pumping_slope(&ws, &cfg, spec.window_start).ok());
    let status = match (&fit, &oracle) {
        (None, _) => CellStatus::NumericalFailure,
        (Some(_), Err(lattice::LatticeError::GapClosed { .. })) => CellStatus::GapClosed,
        _ => CellStatus::Ok,
    };
    SweepCell {
        m,
        phi,
        fit: fit.unwrap_or_else(|| nan_fit(1.0 - spec.window_start)),
        chern,
        raw_chern,
        status,
    }
}

/// Runs every cell of the grid. Cell failures are recorded in the status
/// column; the result order is independent of the worker count.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let ms = spec.m_range.values();
    let phis = spec.phi_range.values();
    let coords: Vec<(f64, f64)> = ms.iter().flat_map(|&m| phis.iter().map(move |&p| (m, p))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.worker_count())
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let cells = pool.install(|| {
        use rayon::prelude::*;
        coords.par_iter().map(|&(m, phi)| run_cell(spec, m, phi)).collect()
    });
    Ok(SweepResult { spec: spec.clone(), cells })
}

/// The same sweep with commensurate drives, `Ω₁/Ω₂ = 3/2`.
pub fn commensurate_control(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    sweep(&SweepSpec { ratio: COMMENSURATE_RATIO, ..spec.clone() })
}
