//! Fixed-step RK4 integration of the two supermode amplitudes, either
//! conservatively (`i∂ₜψ = H(t)ψ`) or with loss and a coherent optical drive
//! (`∂ₜβ = −iH(t)β − γβ + s(t)`).
//!
//! Work done by each drive and the per-tone energies are integrated with the
//! same RK4 stages as the amplitudes, so decimated trajectories carry exact
//! running integrals rather than post-hoc quadratures.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drive::{self, ChannelTarget, DriveConfig, HarmonicChannel};
use crate::hermitian::{self, Hermitian2, Spinor};
use crate::lattice::ModelKind;

/// Largest allowed `dt·‖H‖_bound`.
pub const MAX_PHASE_STEP: f64 = 0.05;
/// `dt·‖H‖_bound` used when no step is configured.
pub const DEFAULT_PHASE_STEP: f64 = 0.035;
/// Output stride (µs) used when no decimation is configured.
pub const DEFAULT_SAMPLE_STRIDE: f64 = 0.01;

const MAX_CHANNELS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("time step {dt:e} exceeds {limit:e} = {max_phase} rad / ‖H‖ bound {bound:e}", max_phase = MAX_PHASE_STEP)]
    StepTooLarge { dt: f64, limit: f64, bound: f64 },
    #[error("non-finite amplitude at t = {t}")]
    NumericalBlowup { t: f64 },
    #[error("amplitude norm vanished at t = {t}")]
    ZeroNorm { t: f64 },
    #[error("initial Hamiltonian is degenerate (gap {gap:e})")]
    DegenerateStart { gap: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// Supermode amplitudes `(β₁, β₂)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub amp: Spinor,
    pub t: f64,
}

impl ModeState {
    pub fn norm(&self) -> f64 {
        hermitian::norm(&self.amp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationConfig {
    /// Intrinsic loss γ.
    pub gamma: f64,
    /// Bus-waveguide coupling γₑ.
    pub gamma_e: f64,
    /// Input amplitude s₀.
    pub s_amp: f64,
    /// Laser offset from the frame centre (rad/µs).
    pub drive_detuning: f64,
    pub enabled: bool,
}

impl DissipationConfig {
    /// γ = γₑ = 0.01, s₀ = 1, laser at −3Ω_R.
    pub fn reference(omega_r: f64) -> Self {
        Self { gamma: 0.01, gamma_e: 0.01, s_amp: 1.0, drive_detuning: -3.0 * omega_r, enabled: true }
    }

    pub fn disabled() -> Self {
        Self { gamma: 0.0, gamma_e: 0.0, s_amp: 0.0, drive_detuning: 0.0, enabled: false }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err("gamma must be finite and non-negative".into());
        }
        if !(self.gamma_e >= 0.0 && self.gamma_e.is_finite()) {
            return Err("gamma_e must be finite and non-negative".into());
        }
        if !self.s_amp.is_finite() || !self.drive_detuning.is_finite() {
            return Err("drive amplitude and detuning must be finite".into());
        }
        Ok(())
    }
}

/// Human-readable statement of the optical-drive phase convention.
pub const DRIVE_FRAME_CONVENTION: &str = "s(t) = sqrt(gamma_e) * s0 * (exp(+i xi), exp(-i xi)); \
     xi(t) = drive_detuning * t - (delta * t + Delta(t)) / 2; Delta(t) = integral of lambda; \
     omega_0 and mu rotated out";

/// Integration horizon, step and output decimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub duration: f64,
    pub dt: f64,
    pub decimate: usize,
}

impl Schedule {
    pub fn new(duration: f64, dt: f64, decimate: usize) -> Self {
        Self { duration, dt, decimate }
    }

    /// `periods` slow-drive periods with the default step and output stride.
    pub fn periods(kind: ModelKind, cfg: &DriveConfig, phi: f64, periods: f64) -> Self {
        let dt = default_step(kind, cfg, phi);
        Self { duration: periods * cfg.slow_period(), dt, decimate: default_decimation(dt) }
    }

    pub fn steps(&self) -> usize {
        ((self.duration / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Step actually taken: the horizon divided into a whole number of steps.
    pub fn effective_dt(&self) -> f64 {
        self.duration / self.steps() as f64
    }

    fn validate(&self) -> Result<(), EvolveError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(EvolveError::InvalidSchedule("duration must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EvolveError::InvalidSchedule("dt must be positive".into()));
        }
        if self.decimate == 0 {
            return Err(EvolveError::InvalidSchedule("decimate must be at least 1".into()));
        }
        Ok(())
    }
}

/// Bound `6Ω_R + |δ|/2 + max|λ|/2` on the instantaneous `‖H‖`.
pub fn hamiltonian_bound(kind: ModelKind, cfg: &DriveConfig, phi: f64) -> f64 {
    6.0 * cfg.omega_r + 0.5 * cfg.delta.abs() + 0.5 * drive::max_frequency_modulation(kind, cfg, phi)
}

pub fn default_step(kind: ModelKind, cfg: &DriveConfig, phi: f64) -> f64 {
    DEFAULT_PHASE_STEP / hamiltonian_bound(kind, cfg, phi)
}

pub fn default_decimation(dt: f64) -> usize {
    ((DEFAULT_SAMPLE_STRIDE / dt).round() as usize).max(1)
}

/// Parameters a trajectory was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunTag {
    pub kind: ModelKind,
    pub drive: DriveConfig,
    pub phi: f64,
    pub dissipation: Option<DissipationConfig>,
    pub schedule: Schedule,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tag: RunTag,
    pub times: Vec<f64>,
    pub states: Vec<ModeState>,
    pub bloch: Vec<[f64; 3]>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub norm: Vec<f64>,
    /// Running integral of λ (the phase modulation Δ) per sample.
    pub phase_mod: Vec<f64>,
    /// Harmonic table used for the per-tone energies.
    pub channels: Vec<HarmonicChannel>,
    /// Per-sample accumulated energy of each tone, `channel_energy[sample][channel]`.
    pub channel_energy: Vec<Vec<f64>>,
    pub len: usize,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn final_state(&self) -> &ModeState {
        self.states.last().expect("trajectories hold at least the initial sample")
    }
}

/// Lower-band eigenvector of `H(0)` with its first nonzero component real
/// and positive.
pub fn initial_state(kind: ModelKind, cfg: &DriveConfig, phi: f64) -> Result<ModeState, EvolveError> {
    let h = drive::effective_hamiltonian(kind, cfg, phi, 0.0);
    let gap = 2.0 * h.pauli_norm();
    if gap < 1e-12 {
        return Err(EvolveError::DegenerateStart { gap });
    }
    let mut v = h.lower_eigenvector().ok_or(EvolveError::DegenerateStart { gap })?;
    let lead = if v[0].norm() > 1e-300 { v[0] } else { v[1] };
    let phase = lead.conj() / lead.norm();
    v = [v[0] * phase, v[1] * phase];
    Ok(ModeState { amp: v, t: 0.0 })
}

/// Conservative evolution from the lower-band eigenstate.
pub fn evolve_conservative(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    schedule: Schedule,
) -> Result<Trajectory, EvolveError> {
    let start = initial_state(kind, cfg, phi)?;
    Integrator::new(kind, *cfg, phi, None, schedule)?.run(start.amp)
}

/// Lossy, optically driven evolution from the lower-band eigenstate.
pub fn evolve_driven_dissipative(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    diss: &DissipationConfig,
    schedule: Schedule,
) -> Result<Trajectory, EvolveError> {
    let start = initial_state(kind, cfg, phi)?;
    evolve_driven_dissipative_from(kind, cfg, phi, diss, schedule, start.amp)
}

pub fn evolve_driven_dissipative_from(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    diss: &DissipationConfig,
    schedule: Schedule,
    start: Spinor,
) -> Result<Trajectory, EvolveError> {
    Integrator::new(kind, *cfg, phi, Some(*diss), schedule)?.run(start)
}

/// Raw amplitudes only, without normalized observables, so the start and
/// intermediate states may have zero norm.
pub fn propagate_amplitudes(
    kind: ModelKind,
    cfg: &DriveConfig,
    phi: f64,
    diss: Option<&DissipationConfig>,
    schedule: Schedule,
    start: Spinor,
) -> Result<Vec<ModeState>, EvolveError> {
    let integ = Integrator::new(kind, *cfg, phi, diss.copied(), schedule)?;
    integ.propagate(start)
}

/// Instantaneous drive quantities shared by the RK4 stages at one time.
struct Snapshot {
    t: f64,
    h: Hermitian2,
    d1: Hermitian2,
    d2: Hermitian2,
    lam: f64,
    chan: [Hermitian2; MAX_CHANNELS],
}

#[derive(Clone, Copy)]
struct StageState {
    amp: Spinor,
    /// Δ(t)
    phase_mod: f64,
    w: [f64; 2],
    energy: [f64; MAX_CHANNELS],
}

impl StageState {
    fn axpy(&self, h: f64, k: &StageState) -> StageState {
        let mut out = *self;
        out.amp[0] += k.amp[0] * h;
        out.amp[1] += k.amp[1] * h;
        out.phase_mod += k.phase_mod * h;
        out.w[0] += k.w[0] * h;
        out.w[1] += k.w[1] * h;
        for (o, d) in out.energy.iter_mut().zip(k.energy.iter()) {
            *o += d * h;
        }
        out
    }
}

struct Integrator {
    kind: ModelKind,
    cfg: DriveConfig,
    phi: f64,
    diss: Option<DissipationConfig>,
    schedule: Schedule,
    channels: Vec<HarmonicChannel>,
    tone_freq: [f64; MAX_CHANNELS],
    drive_amp: f64,
}

impl Integrator {
    fn new(
        kind: ModelKind,
        cfg: DriveConfig,
        phi: f64,
        diss: Option<DissipationConfig>,
        schedule: Schedule,
    ) -> Result<Self, EvolveError> {
        schedule.validate()?;
        cfg.validate().map_err(EvolveError::InvalidSchedule)?;
        if let Some(d) = &diss {
            d.validate().map_err(EvolveError::InvalidSchedule)?;
        }
        let bound = hamiltonian_bound(kind, &cfg, phi);
        let limit = MAX_PHASE_STEP / bound;
        if schedule.dt > limit {
            return Err(EvolveError::StepTooLarge { dt: schedule.dt, limit, bound });
        }
        let channels = drive::harmonic_table(kind);
        let mut tone_freq = [0.0; MAX_CHANNELS];
        for (f, ch) in tone_freq.iter_mut().zip(&channels) {
            *f = ch.frequency(&cfg);
        }
        let drive_amp = diss.map_or(0.0, |d| d.gamma_e.sqrt() * d.s_amp);
        Ok(Self { kind, cfg, phi, diss, schedule, channels, tone_freq, drive_amp })
    }

    fn tag(&self) -> RunTag {
        RunTag { kind: self.kind, drive: self.cfg, phi: self.phi, dissipation: self.diss, schedule: self.schedule }
    }

    /// Everything is assembled from the tone table, one `sin_cos` per tone.
    fn snapshot(&self, t: f64) -> Snapshot {
        let (th1, th2) = drive::theta(t, &self.cfg);
        let mut h = Hermitian2::traceless(0.0, 0.0, 0.5 * self.cfg.delta);
        let mut d1 = Hermitian2::default();
        let mut d2 = Hermitian2::default();
        let mut lam = 0.0;
        let mut chan = [Hermitian2::default(); MAX_CHANNELS];
        for (c, ch) in chan.iter_mut().zip(&self.channels) {
            let (hc, dc) = ch.evaluate(&self.cfg, self.phi, ch.phase(th1, th2));
            h = h + hc;
            if matches!(ch.target, ChannelTarget::Longitudinal) {
                lam -= 2.0 * hc.z;
            }
            d1 = d1 + dc * ch.a;
            d2 = d2 + dc * ch.b;
            *c = dc;
        }
        Snapshot { t, h, d1, d2, lam, chan }
    }

    fn amplitude_rate(&self, snap: &Snapshot, amp: &Spinor, phase_mod: f64) -> Spinor {
        let hv = snap.h.apply(amp);
        let mut out = [C64::new(hv[0].im, -hv[0].re), C64::new(hv[1].im, -hv[1].re)];
        if let Some(d) = &self.diss {
            out[0] -= amp[0] * d.gamma;
            out[1] -= amp[1] * d.gamma;
            if self.drive_amp != 0.0 {
                let xi = d.drive_detuning * snap.t - 0.5 * (self.cfg.delta * snap.t + phase_mod);
                let e = C64::from_polar(self.drive_amp, xi);
                out[0] += e;
                out[1] += e.conj();
            }
        }
        out
    }

    fn rate(&self, snap: &Snapshot, y: &StageState, observe: bool) -> StageState {
        let mut k = StageState {
            amp: self.amplitude_rate(snap, &y.amp, y.phase_mod),
            phase_mod: snap.lam,
            w: [0.0; 2],
            energy: [0.0; MAX_CHANNELS],
        };
        if observe {
            let n2 = hermitian::norm_sqr(&y.amp);
            let [sx, sy, sz] = hermitian::pauli_moments(&y.amp);
            let ex = |op: &Hermitian2| (op.x * sx + op.y * sy + op.z * sz) / n2;
            k.w = [self.cfg.omega1 * ex(&snap.d1), self.cfg.omega2 * ex(&snap.d2)];
            for i in 0..self.channels.len() {
                k.energy[i] = self.tone_freq[i] * ex(&snap.chan[i]);
            }
        }
        k
    }

    fn step(&self, t: f64, h: f64, y: &StageState, now: &Snapshot, observe: bool) -> (StageState, Snapshot) {
        let mid = self.snapshot(t + 0.5 * h);
        let end = self.snapshot(t + h);
        let k1 = self.rate(now, y, observe);
        let k2 = self.rate(&mid, &y.axpy(0.5 * h, &k1), observe);
        let k3 = self.rate(&mid, &y.axpy(0.5 * h, &k2), observe);
        let k4 = self.rate(&end, &y.axpy(h, &k3), observe);
        let mut next = *y;
        let sixth = h / 6.0;
        next = next.axpy(sixth, &k1);
        next = next.axpy(2.0 * sixth, &k2);
        next = next.axpy(2.0 * sixth, &k3);
        next = next.axpy(sixth, &k4);
        (next, end)
    }

    fn propagate(&self, start: Spinor) -> Result<Vec<ModeState>, EvolveError> {
        let n = self.schedule.steps();
        let h = self.schedule.effective_dt();
        let mut y = StageState { amp: start, phase_mod: 0.0, w: [0.0; 2], energy: [0.0; MAX_CHANNELS] };
        let mut snap = self.snapshot(0.0);
        let mut out = vec![ModeState { amp: start, t: 0.0 }];
        for i in 0..n {
            let (next, end) = self.step(i as f64 * h, h, &y, &snap, false);
            y = next;
            snap = end;
            let t = (i + 1) as f64 * h;
            if !(y.amp[0].is_finite() && y.amp[1].is_finite()) {
                return Err(EvolveError::NumericalBlowup { t });
            }
            if (i + 1) % self.schedule.decimate == 0 || i + 1 == n {
                out.push(ModeState { amp: y.amp, t });
            }
        }
        Ok(out)
    }

    fn run(&self, start: Spinor) -> Result<Trajectory, EvolveError> {
        let n = self.schedule.steps();
        let h = self.schedule.effective_dt();
        let nch = self.channels.len();
        let capacity = n / self.schedule.decimate + 2;
        let mut traj = Trajectory {
            tag: self.tag(),
            times: Vec::with_capacity(capacity),
            states: Vec::with_capacity(capacity),
            bloch: Vec::with_capacity(capacity),
            w1: Vec::with_capacity(capacity),
            w2: Vec::with_capacity(capacity),
            norm: Vec::with_capacity(capacity),
            phase_mod: Vec::with_capacity(capacity),
            channels: self.channels.clone(),
            channel_energy: Vec::with_capacity(capacity),
            len: 0,
        };
        let mut y = StageState { amp: start, phase_mod: 0.0, w: [0.0; 2], energy: [0.0; MAX_CHANNELS] };
        record(&mut traj, 0.0, &y, nch)?;
        let mut snap = self.snapshot(0.0);
        for i in 0..n {
            let (next, end) = self.step(i as f64 * h, h, &y, &snap, true);
            y = next;
            snap = end;
            let t = (i + 1) as f64 * h;
            if !(y.amp[0].is_finite() && y.amp[1].is_finite()) {
                return Err(EvolveError::NumericalBlowup { t });
            }
            if (i + 1) % self.schedule.decimate == 0 || i + 1 == n {
                record(&mut traj, t, &y, nch)?;
            }
        }
        Ok(traj)
    }
}

fn record(traj: &mut Trajectory, t: f64, y: &StageState, nch: usize) -> Result<(), EvolveError> {
    let n = hermitian::norm(&y.amp);
    if n < 1e-12 {
        return Err(EvolveError::ZeroNorm { t });
    }
    let [sx, sy, sz] = hermitian::pauli_moments(&y.amp);
    let n2 = n * n;
    traj.times.push(t);
    traj.states.push(ModeState { amp: y.amp, t });
    traj.bloch.push([sx / n2, sy / n2, sz / n2]);
    traj.w1.push(y.w[0]);
    traj.w2.push(y.w[1]);
    traj.norm.push(n);
    traj.phase_mod.push(y.phase_mod);
    traj.channel_energy.push(y.energy[..nch].to_vec());
    traj.len += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn reference_schedule(kind: ModelKind, cfg: &DriveConfig, phi: f64, periods: f64) -> Schedule {
        Schedule::periods(kind, cfg, phi, periods)
    }

    #[test]
    fn strongly_detuned_start_is_lower_supermode() {
        let cfg = DriveConfig::reference(100.0);
        let s = initial_state(ModelKind::BrickWall, &cfg, PI / 2.0).unwrap();
        assert_abs_diff_eq!(s.amp[1].norm(), 1.0, epsilon = 1e-3);
        assert!(s.amp[0].norm() < 0.05);
    }

    #[test]
    fn initial_state_is_an_eigenpair_with_fixed_phase() {
        for kind in ModelKind::ALL {
            let cfg = DriveConfig::reference(1.0);
            let h = drive::effective_hamiltonian(kind, &cfg, PI / 2.0, 0.0);
            let s = initial_state(kind, &cfg, PI / 2.0).unwrap();
            let (lo, _) = h.eigenvalues();
            let hv = h.apply(&s.amp);
            for i in 0..2 {
                assert!((hv[i] - s.amp[i] * lo).norm() < 1e-12 * cfg.omega_r);
            }
            assert_eq!(s.amp[0].im, 0.0);
            assert!(s.amp[0].re > 0.0);
        }
    }

    #[test]
    fn initial_state_matches_closed_form_eigenvector() {
        // |−⟩ ∝ (sin(θ/2)·(−1)..) written via the Bloch angles of H(0)
        let cfg = DriveConfig::reference(1.0);
        for kind in ModelKind::ALL {
            let h = drive::effective_hamiltonian(kind, &cfg, PI / 2.0, 0.0);
            let r = h.pauli_norm();
            let polar = (h.z / r).acos();
            let azimuth = h.y.atan2(h.x);
            let expect = [
                C64::new((polar / 2.0).sin(), 0.0),
                -C64::from_polar((polar / 2.0).cos(), azimuth),
            ];
            let s = initial_state(kind, &cfg, PI / 2.0).unwrap();
            assert_abs_diff_eq!(hermitian::inner(&expect, &s.amp).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_start_rejected() {
        // M = 0, φ = 0 with θ₀ on the Dirac point θ = (2π/3, 0) of the brick-wall model
        let cfg = DriveConfig { phi1: 2.0 * PI / 3.0, phi2: 0.0, ..DriveConfig::reference(0.0) };
        assert!(matches!(
            initial_state(ModelKind::BrickWall, &cfg, 0.0),
            Err(EvolveError::DegenerateStart { .. })
        ));
    }

    #[test]
    fn step_too_large_rejected() {
        let cfg = DriveConfig::reference(1.0);
        let r = evolve_conservative(ModelKind::Haldane, &cfg, PI / 2.0, Schedule::new(1.0, 2.5e-4, 10));
        assert!(matches!(r, Err(EvolveError::StepTooLarge { .. })), "{r:?}");
    }

    #[test]
    fn static_hamiltonian_matches_exact_propagator() {
        // Ω₁ = Ω₂ → 0 freezes θ; use tiny frequencies and compare against exp(−iHt)
        let cfg = DriveConfig { omega1: 1e-12, omega2: 1e-12, ..DriveConfig::reference(1.0) };
        let kind = ModelKind::Haldane;
        let phi = 0.9;
        let h = drive::effective_hamiltonian(kind, &cfg, phi, 0.0);
        let start = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let t_end = 0.5;
        let sched = Schedule::new(t_end, 1e-5, 100);
        let traj = evolve_driven_dissipative_from(kind, &cfg, phi, &DissipationConfig::disabled(), sched, start).unwrap();
        let r = h.pauli_norm();
        let (s, c) = (r * t_end).sin_cos();
        // exp(−iHt) = cos(rt) I − i sin(rt) (d̂·σ)
        let n = Hermitian2::traceless(h.x / r, h.y / r, h.z / r).apply(&start);
        let expect = [start[0] * c - C64::i() * n[0] * s, start[1] * c - C64::i() * n[1] * s];
        let got = traj.final_state().amp;
        for i in 0..2 {
            assert!((got[i] - expect[i]).norm() < 1e-8, "{got:?} vs {expect:?}");
        }
    }

    #[test]
    fn tone_assembled_snapshot_matches_direct_evaluation() {
        let cfg = DriveConfig::reference(1.3);
        for kind in ModelKind::ALL {
            let integ = Integrator::new(kind, cfg, 0.7, None, Schedule::new(1.0, 1e-5, 1)).unwrap();
            for t in [0.0, 0.37, 5.1] {
                let snap = integ.snapshot(t);
                let (th1, th2) = drive::theta(t, &cfg);
                let (g1, g2) = drive::theta_gradient(kind, &cfg, 0.7, th1, th2);
                let lam = drive::modulation(kind, &cfg, 0.7, t).lam;
                assert!(snap.h.distance(&drive::effective_hamiltonian(kind, &cfg, 0.7, t)) < 1e-10);
                assert!(snap.d1.distance(&g1) < 1e-10);
                assert!(snap.d2.distance(&g2) < 1e-10);
                assert_abs_diff_eq!(snap.lam, lam, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn conservative_norm_is_preserved() {
        let cfg = DriveConfig::reference(1.0);
        let sched = reference_schedule(ModelKind::BrickWall, &cfg, PI / 2.0, 3.0);
        let traj = evolve_conservative(ModelKind::BrickWall, &cfg, PI / 2.0, sched).unwrap();
        let drift = traj.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "drift {drift}");
        for b in &traj.bloch {
            let r = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
        }
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_abs_diff_eq!(*traj.times.last().unwrap(), sched.duration, epsilon = 1e-9);
    }

    #[test]
    fn lossless_undriven_dissipative_equals_conservative() {
        let cfg = DriveConfig::reference(1.0);
        let kind = ModelKind::Haldane;
        let sched = reference_schedule(kind, &cfg, PI / 2.0, 1.0);
        let a = evolve_conservative(kind, &cfg, PI / 2.0, sched).unwrap();
        let off = DissipationConfig { gamma: 0.0, gamma_e: 0.0, s_amp: 0.0, ..DissipationConfig::reference(cfg.omega_r) };
        let b = evolve_driven_dissipative(kind, &cfg, PI / 2.0, &off, sched).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for i in 0..2 {
                assert!((x.amp[i] - y.amp[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pure_loss_decays_exponentially() {
        let cfg = DriveConfig::reference(1.0);
        let kind = ModelKind::BrickWall;
        let gamma = 0.05;
        let lossy = DissipationConfig { gamma, gamma_e: 0.0, s_amp: 0.0, ..DissipationConfig::reference(cfg.omega_r) };
        let sched = reference_schedule(kind, &cfg, PI / 2.0, 2.0);
        let traj = evolve_driven_dissipative(kind, &cfg, PI / 2.0, &lossy, sched).unwrap();
        for (t, n) in traj.times.iter().zip(&traj.norm) {
            let expect = (-gamma * t).exp();
            assert!(((n - expect) / expect).abs() < 1e-6);
        }
    }

    #[test]
    fn driven_response_is_linear_in_input_amplitude() {
        let cfg = DriveConfig::reference(2.0);
        let kind = ModelKind::BrickWall;
        let sched = Schedule::new(4.0, 1e-5, 500);
        let base = DissipationConfig::reference(cfg.omega_r);
        let zero = [C64::new(0.0, 0.0); 2];
        let a = propagate_amplitudes(kind, &cfg, PI / 2.0, Some(&base), sched, zero).unwrap();
        let scaled = DissipationConfig { s_amp: 3.7, ..base };
        let b = propagate_amplitudes(kind, &cfg, PI / 2.0, Some(&scaled), sched, zero).unwrap();
        for (x, y) in a.iter().zip(&b).skip(1) {
            for i in 0..2 {
                let expect = x.amp[i] * 3.7;
                assert!((y.amp[i] - expect).norm() <= 1e-10 * expect.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = DriveConfig::reference(1.0);
        let sched = Schedule::new(1.0, 1e-5, 50);
        let diss = DissipationConfig::reference(cfg.omega_r);
        let a = evolve_driven_dissipative(ModelKind::Haldane, &cfg, 1.0, &diss, sched).unwrap();
        let b = evolve_driven_dissipative(ModelKind::Haldane, &cfg, 1.0, &diss, sched).unwrap();
        assert_eq!(a.w1, b.w1);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn zero_norm_detected() {
        let cfg = DriveConfig::reference(1.0);
        let off = DissipationConfig { s_amp: 0.0, ..DissipationConfig::reference(cfg.omega_r) };
        let r = evolve_driven_dissipative_from(
            ModelKind::BrickWall,
            &cfg,
            1.0,
            &off,
            Schedule::new(0.1, 1e-5, 10),
            [C64::new(0.0, 0.0); 2],
        );
        assert_eq!(r.unwrap_err(), EvolveError::ZeroNorm { t: 0.0 });
    }
}
