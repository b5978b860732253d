//! Run configuration in a flat `key = value` text format.
//!
//! Blank lines and text after `#` are ignored. Keys are dotted
//! (`drive.omega1`). Angles accept `pi` expressions such as `pi/2`,
//! `-2*pi/3` or `0.1*pi`. Every key is optional; an empty file yields the
//! conservative brick-wall reference run.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `model.kind` | `brickwall` | `haldane` or `brickwall` |
//! | `model.M` | `1` | lattice mass, sets `δ = 2MΩ_R` |
//! | `model.phi` | `pi/2` | NNN flux φ |
//! | `drive.omega1` | `3` | Ω₁ (rad/µs) |
//! | `drive.ratio` | `golden` | Ω₂/Ω₁, `golden` or a number |
//! | `drive.omega2` | | Ω₂ (rad/µs), instead of `drive.ratio` |
//! | `drive.phi1`, `drive.phi2` | `pi/10`, `0` | initial drive phases |
//! | `drive.omega_r` | `125` | Ω_R (rad/µs) |
//! | `drive.mu` | `30000` | supermode splitting µ, only checked for the RWA |
//! | `dissipation.enabled` | `false` | lossy, optically driven evolution |
//! | `dissipation.gamma`, `dissipation.gamma_e` | `0.01` | loss and coupling |
//! | `dissipation.s_amp` | `1` | input amplitude s₀ |
//! | `dissipation.detuning` | `-3` | laser detuning in units of Ω_R |
//! | `evolve.periods` | `30` | horizon in slow-drive periods |
//! | `evolve.duration` | | horizon in µs, overrides `evolve.periods` |
//! | `evolve.dt` | `auto` | RK4 step (µs) |
//! | `evolve.decimate` | `auto` | output every n-th step |
//! | `evolve.window_start` | `0.1` | fraction discarded before slope fits |
//! | `sweep.mode` | `conservative` | or `driven-dissipative` |
//! | `sweep.m_min`, `sweep.m_max`, `sweep.m_n` | `-6`, `6`, `10` | mass axis |
//! | `sweep.phi_min`, `sweep.phi_max`, `sweep.phi_n` | `-pi`, `pi`, `10` | flux axis |
//! | `sweep.workers` | `auto` | worker threads |
//! | `sweep.oracle_grid` | `48` | Chern grid per cell |
//! | `output.dir` | `out` | output directory |
//! | `run.deterministic` | `true` | must be `true` |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::drive::{DriveConfig, GOLDEN_RATIO};
use crate::evolve::{self, DissipationConfig, Schedule};
use crate::lattice::ModelKind;
use crate::sweep::{Axis, SweepMode, SweepSpec, DEFAULT_ORACLE_GRID};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

const KEYS: &[&str] = &[
    "model.kind",
    "model.M",
    "model.phi",
    "drive.omega1",
    "drive.ratio",
    "drive.omega2",
    "drive.phi1",
    "drive.phi2",
    "drive.omega_r",
    "drive.mu",
    "dissipation.enabled",
    "dissipation.gamma",
    "dissipation.gamma_e",
    "dissipation.s_amp",
    "dissipation.detuning",
    "evolve.periods",
    "evolve.duration",
    "evolve.dt",
    "evolve.decimate",
    "evolve.window_start",
    "sweep.mode",
    "sweep.m_min",
    "sweep.m_max",
    "sweep.m_n",
    "sweep.phi_min",
    "sweep.phi_max",
    "sweep.phi_n",
    "sweep.workers",
    "sweep.oracle_grid",
    "output.dir",
    "run.deterministic",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSettings {
    pub periods: f64,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub decimate: Option<usize>,
    pub window_start: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub mode: SweepMode,
    pub m: Axis,
    pub phi: Axis,
    pub workers: Option<usize>,
    pub oracle_grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub mass: f64,
    pub phi: f64,
    pub drive: DriveConfig,
    pub mu: f64,
    pub dissipation: DissipationConfig,
    /// Laser detuning in units of Ω_R.
    pub detuning: f64,
    pub evolve: EvolveSettings,
    pub sweep: SweepSettings,
    pub output_dir: PathBuf,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let drive = DriveConfig::reference(1.0);
        let detuning = -3.0;
        Self {
            kind: ModelKind::BrickWall,
            mass: 1.0,
            phi: PI / 2.0,
            drive,
            mu: 30_000.0,
            dissipation: DissipationConfig { enabled: false, ..DissipationConfig::reference(drive.omega_r) },
            detuning,
            evolve: EvolveSettings { periods: 30.0, duration: None, dt: None, decimate: None, window_start: 0.1 },
            sweep: SweepSettings {
                mode: SweepMode::Conservative,
                m: Axis::new(-6.0, 6.0, 10),
                phi: Axis::new(-PI, PI, 10),
                workers: None,
                oracle_grid: DEFAULT_ORACLE_GRID,
            },
            output_dir: PathBuf::from("out"),
            deterministic: true,
        }
    }
}

/// Parses a number or a `[sign][coef*]pi[/den]` expression.
pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let lower = t.to_ascii_lowercase().replace(' ', "");
    let (sign, rest) = match lower.strip_prefix('-') {
        Some(r) => (-1.0, r.to_string()),
        None => (1.0, lower.trim_start_matches('+').to_string()),
    };
    let (num, den) = match rest.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().ok()?),
        None => (rest, 1.0),
    };
    let coef = if num == "pi" {
        1.0
    } else if let Some(c) = num.strip_suffix("*pi") {
        c.parse::<f64>().ok()?
    } else {
        num.strip_prefix("pi*")?.parse::<f64>().ok()?
    };
    Some(sign * coef * PI / den)
}

/// `(p, q)` with `x = p/q` for the smallest `q ≤ max_den`, if any.
pub fn rational_approximation(x: f64, max_den: u32) -> Option<(i64, u32)> {
    (1..=max_den).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= 1e-12 * x.abs().max(1.0)).then_some((p as i64, q))
    })
}

/// Raw `key = value` pairs with their line numbers.
fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Parse { line, message: "empty key or value".into() });
        }
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { key: k.to_string(), line });
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn real(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => parse_real(v)
                .filter(|x| x.is_finite())
                .ok_or_else(|| invalid(key, format!("`{v}` is not a finite number"))),
        }
    }

    fn opt_real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.0.get(key).map(String::as_str) {
            None | Some("auto") => Ok(None),
            Some(_) => self.real(key, 0.0).map(Some),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn opt_count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.0.get(key).map(String::as_str) {
            None | Some("auto") => Ok(None),
            Some(_) => self.count(key, 0).map(Some),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.0.get(key).map(String::as_str) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(invalid(key, format!("`{v}` is not true/false"))),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `KEY=VALUE` overrides in order.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (_, k, v) in parse_pairs(text)? {
            map.insert(k, v);
        }
        for o in overrides {
            for (_, k, v) in parse_pairs(o).map_err(|e| match e {
                ConfigError::Parse { message, .. } => ConfigError::Parse { line: 0, message },
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { key, line: 0 },
                other => other,
            })? {
                map.insert(k, v);
            }
        }
        Self::from_values(&Values(map))
    }

    fn from_values(v: &Values) -> Result<Self, ConfigError> {
        let d = RunConfig::default();
        let kind = match v.0.get("model.kind") {
            None => d.kind,
            Some(s) => s.parse().map_err(|e: String| invalid("model.kind", e))?,
        };
        let mass = v.real("model.M", d.mass)?;
        let phi = v.real("model.phi", d.phi)?;
        let omega1 = v.real("drive.omega1", d.drive.omega1)?;
        if omega1 <= 0.0 {
            return Err(invalid("drive.omega1", "must be positive"));
        }
        let omega2 = match (v.0.get("drive.ratio"), v.0.get("drive.omega2")) {
            (Some(_), Some(_)) => return Err(invalid("drive.ratio", "set either drive.ratio or drive.omega2")),
            (None, Some(_)) => v.real("drive.omega2", 0.0)?,
            (Some(r), None) if r == "golden" => omega1 * GOLDEN_RATIO,
            (Some(_), None) => omega1 * v.real("drive.ratio", 0.0)?,
            (None, None) => omega1 * GOLDEN_RATIO,
        };
        if omega2 <= 0.0 {
            let key = if v.0.contains_key("drive.omega2") { "drive.omega2" } else { "drive.ratio" };
            return Err(invalid(key, "Ω₂ must be positive"));
        }
        let omega_r = v.real("drive.omega_r", d.drive.omega_r)?;
        if omega_r <= 0.0 {
            return Err(invalid("drive.omega_r", "must be positive"));
        }
        let drive = DriveConfig {
            omega1,
            omega2,
            phi1: v.real("drive.phi1", d.drive.phi1)?,
            phi2: v.real("drive.phi2", d.drive.phi2)?,
            omega_r,
            delta: 0.0,
        }
        .with_mass(mass);
        let mu = v.real("drive.mu", d.mu)?;
        if mu <= 0.0 {
            return Err(invalid("drive.mu", "must be positive"));
        }
        let detuning = v.real("dissipation.detuning", d.detuning)?;
        let dissipation = DissipationConfig {
            gamma: v.real("dissipation.gamma", d.dissipation.gamma)?,
            gamma_e: v.real("dissipation.gamma_e", d.dissipation.gamma_e)?,
            s_amp: v.real("dissipation.s_amp", d.dissipation.s_amp)?,
            drive_detuning: detuning * omega_r,
            enabled: v.flag("dissipation.enabled", d.dissipation.enabled)?,
        };
        for (key, value) in [("dissipation.gamma", dissipation.gamma), ("dissipation.gamma_e", dissipation.gamma_e)] {
            if value < 0.0 {
                return Err(invalid(key, "must be non-negative"));
            }
        }
        let evolve = EvolveSettings {
            periods: v.real("evolve.periods", d.evolve.periods)?,
            duration: v.opt_real("evolve.duration")?,
            dt: v.opt_real("evolve.dt")?,
            decimate: v.opt_count("evolve.decimate")?,
            window_start: v.real("evolve.window_start", d.evolve.window_start)?,
        };
        if evolve.periods <= 0.0 {
            return Err(invalid("evolve.periods", "must be positive"));
        }
        if evolve.duration.is_some_and(|t| t <= 0.0) {
            return Err(invalid("evolve.duration", "must be positive"));
        }
        if evolve.dt.is_some_and(|t| t <= 0.0) {
            return Err(invalid("evolve.dt", "must be positive"));
        }
        if evolve.decimate == Some(0) {
            return Err(invalid("evolve.decimate", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&evolve.window_start) {
            return Err(invalid("evolve.window_start", "must lie in [0, 1)"));
        }
        let mode = match v.0.get("sweep.mode") {
            None => d.sweep.mode,
            Some(s) => s.parse().map_err(|e: String| invalid("sweep.mode", e))?,
        };
        let m_axis = Axis::new(
            v.real("sweep.m_min", d.sweep.m.min)?,
            v.real("sweep.m_max", d.sweep.m.max)?,
            v.count("sweep.m_n", d.sweep.m.n)?,
        );
        let phi_axis = Axis::new(
            v.real("sweep.phi_min", d.sweep.phi.min)?,
            v.real("sweep.phi_max", d.sweep.phi.max)?,
            v.count("sweep.phi_n", d.sweep.phi.n)?,
        );
        for (prefix, axis) in [("sweep.m", &m_axis), ("sweep.phi", &phi_axis)] {
            if axis.n < 2 {
                return Err(invalid(&format!("{prefix}_n"), "need at least 2 points"));
            }
            if axis.max <= axis.min {
                return Err(invalid(&format!("{prefix}_max"), "must exceed the minimum"));
            }
        }
        let workers = v.opt_count("sweep.workers")?;
        if workers == Some(0) {
            return Err(invalid("sweep.workers", "must be at least 1"));
        }
        let oracle_grid = v.count("sweep.oracle_grid", d.sweep.oracle_grid)?;
        if oracle_grid < 16 {
            return Err(invalid("sweep.oracle_grid", "must be at least 16"));
        }
        let deterministic = v.flag("run.deterministic", true)?;
        if !deterministic {
            return Err(invalid("run.deterministic", "only deterministic runs are supported"));
        }
        let output_dir = v.0.get("output.dir").map_or(d.output_dir, PathBuf::from);
        let cfg = RunConfig {
            kind,
            mass,
            phi,
            drive,
            mu,
            dissipation,
            detuning,
            evolve,
            sweep: SweepSettings { mode, m: m_axis, phi: phi_axis, workers, oracle_grid },
            output_dir,
            deterministic,
        };
        cfg.check_step()?;
        Ok(cfg)
    }

    fn check_step(&self) -> Result<(), ConfigError> {
        if let Some(dt) = self.evolve.dt {
            let limit = evolve::MAX_PHASE_STEP / evolve::hamiltonian_bound(self.kind, &self.drive, self.phi);
            if dt > limit {
                return Err(invalid("evolve.dt", format!("{dt:e} exceeds the stability limit {limit:e}")));
            }
        }
        Ok(())
    }

    /// Resolved `(key, value)` pairs; parsing them back reproduces this config.
    pub fn echo(&self) -> Vec<(String, String)> {
        let auto = |v: Option<String>| v.unwrap_or_else(|| "auto".to_string());
        let pairs: Vec<(&str, String)> = vec![
            ("model.kind", self.kind.name().to_string()),
            ("model.M", self.mass.to_string()),
            ("model.phi", self.phi.to_string()),
            ("drive.omega1", self.drive.omega1.to_string()),
            ("drive.omega2", self.drive.omega2.to_string()),
            ("drive.phi1", self.drive.phi1.to_string()),
            ("drive.phi2", self.drive.phi2.to_string()),
            ("drive.omega_r", self.drive.omega_r.to_string()),
            ("drive.mu", self.mu.to_string()),
            ("dissipation.enabled", self.dissipation.enabled.to_string()),
            ("dissipation.gamma", self.dissipation.gamma.to_string()),
            ("dissipation.gamma_e", self.dissipation.gamma_e.to_string()),
            ("dissipation.s_amp", self.dissipation.s_amp.to_string()),
            ("dissipation.detuning", self.detuning.to_string()),
            ("evolve.periods", self.evolve.periods.to_string()),
            ("evolve.duration", auto(self.evolve.duration.map(|v| v.to_string()))),
            ("evolve.dt", auto(self.evolve.dt.map(|v| v.to_string()))),
            ("evolve.decimate", auto(self.evolve.decimate.map(|v| v.to_string()))),
            ("evolve.window_start", self.evolve.window_start.to_string()),
            ("sweep.mode", self.sweep.mode.to_string()),
            ("sweep.m_min", self.sweep.m.min.to_string()),
            ("sweep.m_max", self.sweep.m.max.to_string()),
            ("sweep.m_n", self.sweep.m.n.to_string()),
            ("sweep.phi_min", self.sweep.phi.min.to_string()),
            ("sweep.phi_max", self.sweep.phi.max.to_string()),
            ("sweep.phi_n", self.sweep.phi.n.to_string()),
            ("sweep.workers", auto(self.sweep.workers.map(|v| v.to_string()))),
            ("sweep.oracle_grid", self.sweep.oracle_grid.to_string()),
            ("output.dir", self.output_dir.display().to_string()),
            ("run.deterministic", self.deterministic.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The echo as a loadable config file.
    pub fn to_config_text(&self) -> String {
        self.echo().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// `Some((p, q))` when Ω₂/Ω₁ = p/q with `q ≤ 64`.
    pub fn commensurate(&self) -> Option<(i64, u32)> {
        rational_approximation(self.drive.ratio(), 64)
    }

    /// Derived quantities reported alongside the echo.
    pub fn derived(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("derived.delta".to_string(), self.drive.delta.to_string()),
            ("derived.ratio".to_string(), self.drive.ratio().to_string()),
            (
                "derived.commensurate".to_string(),
                match self.commensurate() {
                    Some((p, q)) => format!("true ({p}/{q})"),
                    None => "false".to_string(),
                },
            ),
        ];
        let s = self.schedule();
        out.push(("derived.duration".into(), s.duration.to_string()));
        out.push(("derived.dt".into(), s.effective_dt().to_string()));
        out.push(("derived.decimate".into(), s.decimate.to_string()));
        out.push(("derived.rwa_ratio".into(), crate::drive::rwa_ratio(&self.drive, self.mu).to_string()));
        out.push(("derived.adiabaticity_warning".into(), self.drive.adiabaticity_warning().to_string()));
        out
    }

    pub fn schedule(&self) -> Schedule {
        let auto = Schedule::periods(self.kind, &self.drive, self.phi, self.evolve.periods);
        let duration = self.evolve.duration.unwrap_or(auto.duration);
        let dt = self.evolve.dt.unwrap_or(auto.dt);
        let decimate = self.evolve.decimate.unwrap_or_else(|| evolve::default_decimation(dt));
        Schedule::new(duration, dt, decimate)
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            kind: self.kind,
            m_range: self.sweep.m,
            phi_range: self.sweep.phi,
            mode: self.sweep.mode,
            ratio: self.drive.ratio(),
            base: self.drive,
            dissipation: DissipationConfig { enabled: true, ..self.dissipation },
            periods: self.evolve.periods,
            dt: self.evolve.dt,
            decimate: self.evolve.decimate,
            window_start: self.evolve.window_start,
            oracle_grid: self.sweep.oracle_grid,
            workers: self.sweep.workers,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    load_config_with_overrides(path, &[])
}

pub fn load_config_with_overrides(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    RunConfig::parse_with_overrides(&text, overrides)
}
