//! Post-processing of trajectories: work done by each drive, normalized
//! pumping slopes, Bloch-sphere coverage, density of states and the
//! per-tone energy balance.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::drive::{self, ChannelTarget, DriveConfig, HarmonicChannel};
use crate::evolve::{ModeState, Trajectory};
use crate::hermitian;
use crate::lattice::{self, ModelKind};

/// Fraction of the run discarded before slope fits.
pub const DEFAULT_WINDOW_START: f64 = 0.1;
/// Minimum number of samples inside the fit window.
pub const MIN_FIT_SAMPLES: usize = 100;
pub const DEFAULT_COVERAGE_BINS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("trajectory was produced with different parameters ({0})")]
    ConfigMismatch(String),
    #[error("only {got} samples in the fit window, need {need}")]
    InsufficientData { got: usize, need: usize },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkSeries {
    pub times: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl WorkSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_tag(traj: &Trajectory, kind: ModelKind, cfg: &DriveConfig, phi: f64) -> Result<(), ObservableError> {
    let tag = &traj.tag;
    if tag.kind != kind {
        return Err(ObservableError::ConfigMismatch(format!("model {} vs {}", tag.kind, kind)));
    }
    if tag.drive != *cfg {
        return Err(ObservableError::ConfigMismatch("drive configuration differs".into()));
    }
    if tag.phi != phi {
        return Err(ObservableError::ConfigMismatch(format!("flux {} vs {}", tag.phi, phi)));
    }
    Ok(())
}

/// `Wᵢ(t) = ∫ Ωᵢ⟨∂H/∂θᵢ⟩ dt`, as accumulated by the integrator.
pub fn work_done(traj: &Trajectory, kind: ModelKind, cfg: &DriveConfig, phi: f64) -> Result<WorkSeries, ObservableError> {
    check_tag(traj, kind, cfg, phi)?;
    Ok(WorkSeries { times: traj.times.clone(), w1: traj.w1.clone(), w2: traj.w2.clone() })
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits `y = rate·x + intercept`. A series with no variance is fitted
/// exactly and reports `r2 = 1`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - rate * mx;
    let r2 = if syy > 0.0 && sxx > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    LinearFit { rate, intercept, r2 }
}

/// Normalized pumping rates `2π·Ẇᵢ/(Ω₁Ω₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope1: f64,
    pub slope2: f64,
    pub r2_1: f64,
    pub r2_2: f64,
    /// Fraction of the series used.
    pub window: f64,
}

impl SlopeFit {
    pub fn antisymmetry(&self) -> f64 {
        (self.slope1 + self.slope2).abs()
    }
}

/// `2π/(Ω₁Ω₂)`, the factor turning a work rate into a normalized slope.
pub fn slope_normalization(cfg: &DriveConfig) -> f64 {
    2.0 * PI / (cfg.omega1 * cfg.omega2)
}

/// Least-squares slopes of both work series over `[window_start·T, T]`.
pub fn pumping_slope(ws: &WorkSeries, cfg: &DriveConfig, window_start: f64) -> Result<SlopeFit, ObservableError> {
    if !(0.0..1.0).contains(&window_start) {
        return Err(ObservableError::InvalidArgument(format!("window start {window_start} not in [0, 1)")));
    }
    let (Some(&t0), Some(&t_end)) = (ws.times.first(), ws.times.last()) else {
        return Err(ObservableError::InsufficientData { got: 0, need: MIN_FIT_SAMPLES });
    };
    let cut = t0 + window_start * (t_end - t0);
    let first = ws.times.partition_point(|&t| t < cut);
    let got = ws.len() - first;
    if got < MIN_FIT_SAMPLES {
        return Err(ObservableError::InsufficientData { got, need: MIN_FIT_SAMPLES });
    }
    let t = &ws.times[first..];
    let f1 = linear_fit(t, &ws.w1[first..]);
    let f2 = linear_fit(t, &ws.w2[first..]);
    let k = slope_normalization(cfg);
    Ok(SlopeFit { slope1: k * f1.rate, slope2: k * f2.rate, r2_1: f1.r2, r2_2: f2.r2, window: 1.0 - window_start })
}

/// `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of the normalized state.
pub fn bloch_vector(state: &ModeState) -> Result<[f64; 3], ObservableError> {
    let n2 = hermitian::norm_sqr(&state.amp);
    if n2 < 1e-24 {
        return Err(ObservableError::ZeroNorm);
    }
    let [x, y, z] = hermitian::pauli_moments(&state.amp);
    Ok([x / n2, y / n2, z / n2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n_bins: usize,
    pub visited: usize,
    pub fraction: f64,
}

/// Equal-area partition of the unit sphere into latitude bands, each split
/// into equal longitude sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereBins {
    /// Upper `z` of each band, starting at the north pole.
    band_top: Vec<f64>,
    sectors: Vec<usize>,
    offsets: Vec<usize>,
    n_bins: usize,
}

impl SphereBins {
    pub fn new(n_bins: usize) -> Self {
        assert!(n_bins >= 1);
        let n_bands = ((n_bins as f64).sqrt().round() as usize).clamp(1, n_bins);
        // sector counts follow the band's share of the sphere for bands of
        // equal polar-angle height
        let shares: Vec<f64> = (0..n_bands)
            .map(|j| {
                let (a, b) = (PI * j as f64 / n_bands as f64, PI * (j + 1) as f64 / n_bands as f64);
                0.5 * (a.cos() - b.cos()) * n_bins as f64
            })
            .collect();
        let mut sectors: Vec<usize> = shares.iter().map(|s| (s.floor() as usize).max(1)).collect();
        let mut assigned: usize = sectors.iter().sum();
        let mut order: Vec<usize> = (0..n_bands).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        let mut i = 0;
        while assigned < n_bins {
            sectors[order[i % n_bands]] += 1;
            assigned += 1;
            i += 1;
        }
        while assigned > n_bins {
            let j = order[n_bands - 1 - (i % n_bands)];
            if sectors[j] > 1 {
                sectors[j] -= 1;
                assigned -= 1;
            }
            i += 1;
        }
        let mut band_top = Vec::with_capacity(n_bands);
        let mut offsets = Vec::with_capacity(n_bands);
        let (mut z, mut offset) = (1.0, 0);
        for &s in &sectors {
            band_top.push(z);
            offsets.push(offset);
            z -= 2.0 * s as f64 / n_bins as f64;
            offset += s;
        }
        Self { band_top, sectors, offsets, n_bins }
    }

    pub fn len(&self) -> usize {
        self.n_bins
    }

    pub fn is_empty(&self) -> bool {
        self.n_bins == 0
    }

    /// Area of every bin, `4π/n`.
    pub fn bin_area(&self) -> f64 {
        4.0 * PI / self.n_bins as f64
    }

    /// Height in `z` of each band.
    pub fn band_heights(&self) -> Vec<f64> {
        self.sectors.iter().map(|&s| 2.0 * s as f64 / self.n_bins as f64).collect()
    }

    pub fn bin_of(&self, v: [f64; 3]) -> usize {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let z = (v[2] / r).clamp(-1.0, 1.0);
        let band = self.band_top.partition_point(|&top| top > z).saturating_sub(1);
        let az = v[1].atan2(v[0]) + PI;
        let n = self.sectors[band];
        let sector = ((az / (2.0 * PI) * n as f64).floor() as usize).min(n - 1);
        self.offsets[band] + sector
    }
}

/// Fraction of equal-area sphere cells hit by at least one Bloch vector.
pub fn coverage_fraction(traj: &Trajectory, n_bins: usize) -> CoverageReport {
    coverage_of(&traj.bloch, n_bins)
}

pub fn coverage_of(points: &[[f64; 3]], n_bins: usize) -> CoverageReport {
    let bins = SphereBins::new(n_bins);
    let mut hit = vec![false; n_bins];
    for p in points {
        hit[bins.bin_of(*p)] = true;
    }
    let visited = hit.iter().filter(|&&h| h).count();
    CoverageReport { n_bins, visited, fraction: visited as f64 / n_bins as f64 }
}

/// Normalized histogram of the instantaneous eigenenergies over the BZ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosHistogram {
    /// Bin edges in units of Ω_R.
    pub edges: Vec<f64>,
    /// Density per bin; `Σ density·width = 1`.
    pub density: Vec<f64>,
    pub mass: f64,
    /// Smallest `|E|` seen on the grid (units of Ω_R).
    pub min_abs_energy: f64,
}

impl DosHistogram {
    /// Density of the bin containing `energy`, zero outside the range.
    pub fn density_at(&self, energy: f64) -> f64 {
        let last = self.edges.len() - 1;
        if energy < self.edges[0] || energy > self.edges[last] {
            return 0.0;
        }
        let i = self.edges.partition_point(|&e| e <= energy).saturating_sub(1).min(self.density.len() - 1);
        self.density[i]
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum()
    }
}

/// Both eigenvalues of `H(θ)/Ω_R` on a `grid_n²` grid over the BZ
/// parallelogram, histogrammed on a range symmetric about zero.
pub fn density_of_states(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    mass: f64,
    grid_n: usize,
    n_energy_bins: usize,
) -> Result<DosHistogram, ObservableError> {
    if grid_n < 64 {
        return Err(ObservableError::InvalidArgument(format!("grid_n = {grid_n} below 64")));
    }
    if n_energy_bins < 2 {
        return Err(ObservableError::InvalidArgument("need at least two energy bins".into()));
    }
    let cfg = cfg.with_mass(mass);
    let geo = lattice::geometry(kind);
    let step = 1.0 / grid_n as f64;
    let mut radii = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        for j in 0..grid_n {
            let k = geo.bz_point(i as f64 * step, j as f64 * step);
            let h = drive::hamiltonian_at_theta(kind, &cfg, phi, k.x, k.y);
            radii.push(h.pauli_norm() / cfg.omega_r);
        }
    }
    let e_max = radii.iter().cloned().fold(0.0, f64::max) * (1.0 + 1e-9);
    let min_abs_energy = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let width = 2.0 * e_max / n_energy_bins as f64;
    let edges: Vec<f64> = (0..=n_energy_bins).map(|i| -e_max + i as f64 * width).collect();
    let mut counts = vec![0usize; n_energy_bins];
    let index = |e: f64| (((e + e_max) / width).floor() as usize).min(n_energy_bins - 1);
    for &r in &radii {
        counts[index(r)] += 1;
        // mirror the upper-band bin so that the histogram is exactly even
        counts[n_energy_bins - 1 - index(r)] += 1;
    }
    let total = (2 * radii.len()) as f64;
    let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    Ok(DosHistogram { edges, density, mass, min_abs_energy })
}

/// Accumulated energy of each modulation tone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicWork {
    pub channels: Vec<HarmonicChannel>,
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// `energy[channel][sample]`
    pub energy: Vec<Vec<f64>>,
}

impl HarmonicWork {
    /// Sum over all tones at each sample.
    pub fn total(&self) -> Vec<f64> {
        (0..self.times.len()).map(|i| self.energy.iter().map(|e| e[i]).sum()).collect()
    }

    /// Fitted power of every tone over `[window_start·T, T]`.
    pub fn powers(&self, window_start: f64) -> Vec<f64> {
        let first = window_index(&self.times, window_start);
        self.energy.iter().map(|e| linear_fit(&self.times[first..], &e[first..]).rate).collect()
    }

    fn find(&self, a: f64, b: f64, longitudinal: bool) -> Option<usize> {
        self.channels.iter().position(|c| {
            (c.a - a).abs() < 1e-12
                && (c.b - b).abs() < 1e-12
                && matches!(c.target, ChannelTarget::Longitudinal) == longitudinal
        })
    }

    /// Brick-wall net power
    /// `½(P_{Ω₁} − P_{Ω₂}) + ½(P_{Ω₂+Ω₁} − P_{Ω₂−Ω₁})` from the fitted tone
    /// powers. Returns `None` for the honeycomb table.
    pub fn brick_wall_net_power(&self, window_start: f64) -> Option<f64> {
        let first = self.find(1.0, 0.0, false)?;
        let second = self.find(0.0, 1.0, false)?;
        let sum = self.find(1.0, 1.0, true)?;
        let diff = self.find(-1.0, 1.0, true)?;
        let p = self.powers(window_start);
        Some(0.5 * (p[first] - p[second]) + 0.5 * (p[sum] - p[diff]))
    }

    /// Honeycomb powers along the two synthetic directions,
    /// `P_x = (P_{a₁} − P_{a₂} + P_{b₃})/(2√3)` and
    /// `P_y = (−P_{a₂} + 2P_{a₃} − P_{a₁} − P_{b₁} − P_{b₂})/6`, where `P_v` is
    /// the fitted power of the tone at frequency `v·Ω`.
    /// Returns `None` for the brick-wall table.
    pub fn honeycomb_directional_power(&self, window_start: f64) -> Option<(f64, f64)> {
        let h = 0.5 * 3f64.sqrt();
        let a1 = self.find(h, 0.5, false)?;
        let a2 = self.find(-h, 0.5, false)?;
        // a₃·Ω = −Ω₂ is stored as the +Ω₂ tone; the tone energy is even in the sign
        let a3 = self.find(0.0, 1.0, false)?;
        let b1 = self.find(-h, 1.5, true)?;
        let b2 = self.find(-h, -1.5, true)?;
        let b3 = self.find(2.0 * h, 0.0, true)?;
        let p = self.powers(window_start);
        let px = (p[a1] - p[a2] + p[b3]) / (2.0 * 3f64.sqrt());
        let py = (-p[a2] + 2.0 * p[a3] - p[a1] - p[b1] - p[b2]) / 6.0;
        Some((px, py))
    }
}

fn window_index(times: &[f64], window_start: f64) -> usize {
    match (times.first(), times.last()) {
        (Some(&t0), Some(&t1)) => times.partition_point(|&t| t < t0 + window_start * (t1 - t0)),
        _ => 0,
    }
}

/// Per-tone energies `E_c = ∫ν_c⟨∂H_c/∂χ_c⟩dt` accumulated by the integrator.
/// `table` must be the tone table the trajectory was integrated with.
pub fn work_by_harmonic(
    traj: &Trajectory,
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    table: &[HarmonicChannel],
) -> Result<HarmonicWork, ObservableError> {
    check_tag(traj, kind, cfg, phi)?;
    if table != traj.channels.as_slice() {
        return Err(ObservableError::ConfigMismatch("harmonic table differs from the integrated one".into()));
    }
    let energy = (0..table.len()).map(|c| traj.channel_energy.iter().map(|e| e[c]).collect()).collect();
    Ok(HarmonicWork {
        channels: table.to_vec(),
        labels: table.iter().map(|c| c.label()).collect(),
        times: traj.times.clone(),
        energy,
    })
}

/// Largest relative deviation between `W₁ + W₂` and the tone-summed energy.
pub fn harmonic_completeness_error(ws: &WorkSeries, hw: &HarmonicWork) -> f64 {
    let total = hw.total();
    let scale = ws
        .w1
        .iter()
        .zip(&ws.w2)
        .map(|(a, b)| a.abs() + b.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    ws.w1
        .iter()
        .zip(&ws.w2)
        .zip(&total)
        .map(|((a, b), e)| (a + b - e).abs() / scale)
        .fold(0.0, f64::max)
}
