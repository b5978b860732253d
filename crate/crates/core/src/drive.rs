//! Two-tone modulation synthesis for the photonic molecule and the effective
//! spin-1/2 Hamiltonian it produces.
//!
//! The drive phases `θᵢ(t) = Ωᵢt + φᵢ` play the role of quasi-momenta. The
//! rotating-frame Hamiltonian is
//!
//! ```text
//! H(t) = ((δ − λ(t))/2) σz + (gVx(t)/2) σx + (gVy(t)/2) σy,   gV₀ = 2Ω_R
//! ```
//!
//! with `Vx`, `Vy` the amplitude envelopes and `λ` the frequency modulation.
//! The detuning is tied to the lattice mass by `δ = 2MΩ_R`, which makes
//! `H(θ) = Ω_R · d(θ; M, −φ)·σ` where `d` is the lattice Bloch vector with
//! `t₁ = t₂ = 1`. In particular the gap closes at exactly the lattice phase
//! boundaries, and the Chern number of `H(θ)` is the negative of the lattice
//! Chern number at the same `(M, φ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hermitian::Hermitian2;
use crate::lattice::{ModelKind, Vec2};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const HALF_SQRT3: f64 = SQRT3 / 2.0;

/// `(1 + √5)/2`
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Drive parameters. All angular frequencies in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Rabi scale Ω_R = gV₀/2.
    pub omega_r: f64,
    /// RF detuning δ.
    pub delta: f64,
}

impl DriveConfig {
    /// Golden-ratio drive at Ω₁ = 3, Ω_R = 125, θ₀ = (π/10, 0).
    pub fn reference(mass: f64) -> Self {
        let omega_r = 125.0;
        Self {
            omega1: 3.0,
            omega2: 3.0 * GOLDEN_RATIO,
            phi1: PI / 10.0,
            phi2: 0.0,
            omega_r,
            delta: detuning_for_mass(mass, omega_r),
        }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.delta = detuning_for_mass(mass, self.omega_r);
        self
    }

    pub fn mass(&self) -> f64 {
        self.delta / (2.0 * self.omega_r)
    }

    /// `gV₀`
    pub fn g_v0(&self) -> f64 {
        2.0 * self.omega_r
    }

    /// Ω₂/Ω₁.
    pub fn ratio(&self) -> f64 {
        self.omega2 / self.omega1
    }

    /// Period of the slower drive.
    pub fn slow_period(&self) -> f64 {
        2.0 * PI / self.omega1.min(self.omega2)
    }

    /// Raised when a drive is not at least ten times slower than Ω_R.
    pub fn adiabaticity_warning(&self) -> bool {
        self.omega1.max(self.omega2) > self.omega_r / 10.0
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.omega1, self.omega2, self.phi1, self.phi2, self.omega_r, self.delta];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err("drive parameters must be finite".into());
        }
        if self.omega1 <= 0.0 {
            return Err("omega1 must be positive".into());
        }
        if self.omega2 <= 0.0 {
            return Err("omega2 must be positive".into());
        }
        if self.omega_r <= 0.0 {
            return Err("omega_r must be positive".into());
        }
        Ok(())
    }
}

/// `δ = 2MΩ_R`
pub fn detuning_for_mass(mass: f64, omega_r: f64) -> f64 {
    2.0 * mass * omega_r
}

/// Amplitude envelopes in units of V₀ and frequency modulation λ (rad/µs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationSample {
    pub t: f64,
    pub vx: f64,
    pub vy: f64,
    pub lam: f64,
}

/// Unwrapped drive phases `(Ω₁t + φ₁, Ω₂t + φ₂)`.
pub fn theta(t: f64, cfg: &DriveConfig) -> (f64, f64) {
    (cfg.omega1 * t + cfg.phi1, cfg.omega2 * t + cfg.phi2)
}

/// Modulation envelopes evaluated directly at the drive phases.
pub fn modulation_at(kind: ModelKind, g_v0: f64, phi: f64, th1: f64, th2: f64) -> (f64, f64, f64) {
    let lam_scale = -2.0 * g_v0 * phi.sin();
    match kind {
        ModelKind::Haldane => {
            let (s1, c1) = (HALF_SQRT3 * th1 + 0.5 * th2).sin_cos();
            let (s2, c2) = (-HALF_SQRT3 * th1 + 0.5 * th2).sin_cos();
            let (s3, c3) = th2.sin_cos();
            let vx = c1 + c2 + c3;
            let vy = s1 + s2 - s3;
            let lam = lam_scale
                * ((-HALF_SQRT3 * th1 + 1.5 * th2).sin()
                    + (-HALF_SQRT3 * th1 - 1.5 * th2).sin()
                    + (SQRT3 * th1).sin());
            (vx, vy, lam)
        }
        ModelKind::BrickWall => {
            let vx = 2.0 * th1.cos() + th2.cos();
            let vy = -th2.sin();
            let lam = lam_scale * ((th2 - th1).sin() - (th2 + th1).sin());
            (vx, vy, lam)
        }
    }
}

pub fn modulation(kind: ModelKind, cfg: &DriveConfig, phi: f64, t: f64) -> ModulationSample {
    let (th1, th2) = theta(t, cfg);
    let (vx, vy, lam) = modulation_at(kind, cfg.g_v0(), phi, th1, th2);
    ModulationSample { t, vx, vy, lam }
}

/// `H(θ)` for a static drive-phase pair.
pub fn hamiltonian_at_theta(kind: ModelKind, cfg: &DriveConfig, phi: f64, th1: f64, th2: f64) -> Hermitian2 {
    let g_v0 = cfg.g_v0();
    let (vx, vy, lam) = modulation_at(kind, g_v0, phi, th1, th2);
    Hermitian2::traceless(0.5 * g_v0 * vx, 0.5 * g_v0 * vy, 0.5 * (cfg.delta - lam))
}

pub fn effective_hamiltonian(kind: ModelKind, cfg: &DriveConfig, phi: f64, t: f64) -> Hermitian2 {
    let (th1, th2) = theta(t, cfg);
    hamiltonian_at_theta(kind, cfg, phi, th1, th2)
}

/// Static map `θ ↦ H(θ)`, with the drive phases in the role of `k`.
pub fn theta_map(kind: ModelKind, cfg: DriveConfig, phi: f64) -> impl Fn(Vec2) -> Hermitian2 {
    move |k| hamiltonian_at_theta(kind, &cfg, phi, k.x, k.y)
}

/// Which drive phase a derivative is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

impl TryFrom<u8> for Axis {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Axis::First),
            2 => Ok(Axis::Second),
            other => Err(format!("axis must be 1 or 2, got {other}")),
        }
    }
}

/// `(∂H/∂θ₁, ∂H/∂θ₂)` at the given drive phases.
pub fn theta_gradient(kind: ModelKind, cfg: &DriveConfig, phi: f64, th1: f64, th2: f64) -> (Hermitian2, Hermitian2) {
    let half = 0.5 * cfg.g_v0();
    // λ = −2gV₀ sin φ · S(θ) and Hz = (δ − λ)/2, so ∂Hz = gV₀ sin φ ∂S
    let z_scale = cfg.g_v0() * phi.sin();
    match kind {
        ModelKind::Haldane => {
            let (s1, c1) = (HALF_SQRT3 * th1 + 0.5 * th2).sin_cos();
            let (s2, c2) = (-HALF_SQRT3 * th1 + 0.5 * th2).sin_cos();
            let (s3, c3) = th2.sin_cos();
            let cb1 = (-HALF_SQRT3 * th1 + 1.5 * th2).cos();
            let cb2 = (-HALF_SQRT3 * th1 - 1.5 * th2).cos();
            let cb3 = (SQRT3 * th1).cos();
            let d1 = Hermitian2::traceless(
                half * HALF_SQRT3 * (s2 - s1),
                half * HALF_SQRT3 * (c1 - c2),
                z_scale * (-HALF_SQRT3 * cb1 - HALF_SQRT3 * cb2 + SQRT3 * cb3),
            );
            let d2 = Hermitian2::traceless(
                half * (-0.5 * s1 - 0.5 * s2 - s3),
                half * (0.5 * c1 + 0.5 * c2 - c3),
                z_scale * (1.5 * cb1 - 1.5 * cb2),
            );
            (d1, d2)
        }
        ModelKind::BrickWall => {
            let (s1, _) = th1.sin_cos();
            let (s2, c2) = th2.sin_cos();
            let cm = (th2 - th1).cos();
            let cp = (th2 + th1).cos();
            let d1 = Hermitian2::traceless(-2.0 * half * s1, 0.0, z_scale * (-cm - cp));
            let d2 = Hermitian2::traceless(-half * s2, -half * c2, z_scale * (cm - cp));
            (d1, d2)
        }
    }
}

/// Analytic `∂H/∂θ_axis` at time `t`.
pub fn dh_dtheta(kind: ModelKind, cfg: &DriveConfig, phi: f64, t: f64, axis: Axis) -> Hermitian2 {
    let (th1, th2) = theta(t, cfg);
    let (d1, d2) = theta_gradient(kind, cfg, phi, th1, th2);
    match axis {
        Axis::First => d1,
        Axis::Second => d2,
    }
}

/// Pauli channel driven by one tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelTarget {
    /// Contributes `Ω_R·w·(cos χ σx + y_sign·sin χ σy)`.
    Transverse { y_sign: f64 },
    /// Contributes `−λ_c/2 = gV₀ sin φ·w·sin χ σz`.
    Longitudinal,
}

/// One tone `χ = a·θ₁ + b·θ₂` of the modulation and the part of `H` it drives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicChannel {
    pub a: f64,
    pub b: f64,
    pub target: ChannelTarget,
    pub weight: f64,
}

impl HarmonicChannel {
    const fn transverse(a: f64, b: f64, weight: f64, y_sign: f64) -> Self {
        Self { a, b, target: ChannelTarget::Transverse { y_sign }, weight }
    }

    const fn longitudinal(a: f64, b: f64, weight: f64) -> Self {
        Self { a, b, target: ChannelTarget::Longitudinal, weight }
    }

    pub fn phase(&self, th1: f64, th2: f64) -> f64 {
        self.a * th1 + self.b * th2
    }

    /// Angular frequency `aΩ₁ + bΩ₂` of the tone.
    pub fn frequency(&self, cfg: &DriveConfig) -> f64 {
        self.a * cfg.omega1 + self.b * cfg.omega2
    }

    pub fn label(&self) -> String {
        let axis = match self.target {
            ChannelTarget::Transverse { .. } => "xy",
            ChannelTarget::Longitudinal => "z",
        };
        format!("{}_{}_{}", axis, fmt_coef(self.a), fmt_coef(self.b))
    }

    /// This channel's contribution to `H`.
    pub fn hamiltonian(&self, cfg: &DriveConfig, phi: f64, th1: f64, th2: f64) -> Hermitian2 {
        let (s, c) = self.phase(th1, th2).sin_cos();
        match self.target {
            ChannelTarget::Transverse { y_sign } => {
                let amp = cfg.omega_r * self.weight;
                Hermitian2::traceless(amp * c, amp * y_sign * s, 0.0)
            }
            ChannelTarget::Longitudinal => {
                Hermitian2::traceless(0.0, 0.0, cfg.g_v0() * phi.sin() * self.weight * s)
            }
        }
    }

    /// `(H_c, ∂H_c/∂χ)` at the tone phase `χ`.
    pub fn evaluate(&self, cfg: &DriveConfig, phi: f64, chi: f64) -> (Hermitian2, Hermitian2) {
        let (s, c) = chi.sin_cos();
        match self.target {
            ChannelTarget::Transverse { y_sign } => {
                let amp = cfg.omega_r * self.weight;
                (
                    Hermitian2::traceless(amp * c, amp * y_sign * s, 0.0),
                    Hermitian2::traceless(-amp * s, amp * y_sign * c, 0.0),
                )
            }
            ChannelTarget::Longitudinal => {
                let amp = cfg.g_v0() * phi.sin() * self.weight;
                (Hermitian2::traceless(0.0, 0.0, amp * s), Hermitian2::traceless(0.0, 0.0, amp * c))
            }
        }
    }

    /// `∂H_c/∂χ`.
    pub fn phase_derivative(&self, cfg: &DriveConfig, phi: f64, th1: f64, th2: f64) -> Hermitian2 {
        let (s, c) = self.phase(th1, th2).sin_cos();
        match self.target {
            ChannelTarget::Transverse { y_sign } => {
                let amp = cfg.omega_r * self.weight;
                Hermitian2::traceless(-amp * s, amp * y_sign * c, 0.0)
            }
            ChannelTarget::Longitudinal => {
                Hermitian2::traceless(0.0, 0.0, cfg.g_v0() * phi.sin() * self.weight * c)
            }
        }
    }
}

fn fmt_coef(v: f64) -> String {
    let known = [(HALF_SQRT3, "sqrt3/2"), (SQRT3, "sqrt3"), (1.5, "3/2"), (0.5, "1/2")];
    for (value, name) in known {
        if (v.abs() - value).abs() < 1e-12 {
            return if v < 0.0 { format!("-{name}") } else { name.to_string() };
        }
    }
    format!("{}", v)
}

/// Every tone present in the modulation of `kind`.
pub fn harmonic_table(kind: ModelKind) -> Vec<HarmonicChannel> {
    match kind {
        ModelKind::BrickWall => vec![
            // 2cos θ₁ σx (a₁ and a₂ combined; their sines cancel)
            HarmonicChannel::transverse(1.0, 0.0, 2.0, 0.0),
            // cos θ₂ σx − sin θ₂ σy
            HarmonicChannel::transverse(0.0, 1.0, 1.0, -1.0),
            HarmonicChannel::longitudinal(-1.0, 1.0, 1.0),
            HarmonicChannel::longitudinal(1.0, 1.0, -1.0),
        ],
        ModelKind::Haldane => vec![
            HarmonicChannel::transverse(HALF_SQRT3, 0.5, 1.0, 1.0),
            HarmonicChannel::transverse(-HALF_SQRT3, 0.5, 1.0, 1.0),
            HarmonicChannel::transverse(0.0, 1.0, 1.0, -1.0),
            HarmonicChannel::longitudinal(-HALF_SQRT3, 1.5, 1.0),
            HarmonicChannel::longitudinal(-HALF_SQRT3, -1.5, 1.0),
            HarmonicChannel::longitudinal(SQRT3, 0.0, 1.0),
        ],
    }
}

/// `H(θ)` assembled tone by tone from the harmonic table.
pub fn hamiltonian_from_channels(
    channels: &[HarmonicChannel],
    cfg: &DriveConfig,
    phi: f64,
    th1: f64,
    th2: f64,
) -> Hermitian2 {
    channels
        .iter()
        .fold(Hermitian2::traceless(0.0, 0.0, 0.5 * cfg.delta), |acc, ch| {
            acc + ch.hamiltonian(cfg, phi, th1, th2)
        })
}

/// Largest `|gVx|`, `|gVy|` the synthesized envelopes can reach.
pub fn max_transverse_drive(kind: ModelKind, cfg: &DriveConfig) -> f64 {
    let _ = kind;
    // both models have three unit-amplitude NN tones along x
    3.0 * cfg.g_v0()
}

/// Upper bound on `|λ|`.
pub fn max_frequency_modulation(kind: ModelKind, cfg: &DriveConfig, phi: f64) -> f64 {
    let terms = match kind {
        ModelKind::Haldane => 3.0,
        ModelKind::BrickWall => 2.0,
    };
    2.0 * cfg.g_v0() * phi.sin().abs() * terms
}

/// Ratio `6Ω_R/µ` that must stay small for the rotating-wave approximation.
pub fn rwa_ratio(cfg: &DriveConfig, mu: f64) -> f64 {
    6.0 * cfg.omega_r / mu
}
