//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use floquet_core::drive::{self, DriveConfig};
use floquet_core::evolve::{self, DissipationConfig, Schedule, Trajectory};
use floquet_core::lattice::{self, HaldaneParams, ModelKind};
use floquet_core::observables::{self, SlopeFit, DEFAULT_COVERAGE_BINS, DEFAULT_WINDOW_START};
use floquet_core::sweep::{self, CellChern, CellStatus, SweepMode, SweepResult, SweepSpec};

const PERIODS: f64 = 30.0;
const PHI: f64 = PI / 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

struct Run {
    traj: Trajectory,
    fit: SlopeFit,
    completeness: f64,
}

fn run(kind: ModelKind, mass: f64, phi: f64, diss: Option<&DissipationConfig>, periods: f64) -> Run {
    let cfg = DriveConfig::reference(mass);
    let schedule = Schedule::periods(kind, &cfg, phi, periods);
    let traj = match diss {
        Some(d) => evolve::evolve_driven_dissipative(kind, &cfg, phi, d, schedule),
        None => evolve::evolve_conservative(kind, &cfg, phi, schedule),
    }
    .expect("evolution");
    let ws = observables::work_done(&traj, kind, &cfg, phi).expect("work");
    let fit = observables::pumping_slope(&ws, &cfg, DEFAULT_WINDOW_START).expect("fit");
    let hw = observables::work_by_harmonic(&traj, kind, &cfg, phi, &drive::harmonic_table(kind)).expect("tones");
    let completeness = observables::harmonic_completeness_error(&ws, &hw);
    Run { traj, fit, completeness }
}

fn boundary(kind: ModelKind, phi: f64) -> f64 {
    lattice::phase_boundary(kind, phi).0.abs()
}

fn lattice_chern(kind: ModelKind, mass: f64, phi: f64, grid: usize) -> Option<i32> {
    lattice::chern_number(lattice::bloch_hamiltonian(kind, HaldaneParams::new(mass, phi)), &lattice::geometry(kind), grid).ok()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Conservative runs at the reference point shared by several criteria.
struct Reference {
    topo: Run,
    trivial: Run,
    edge: Run,
}

fn reference_runs(kind: ModelKind) -> Reference {
    Reference {
        topo: run(kind, 1.0, PHI, None, PERIODS),
        trivial: run(kind, 6.0, PHI, None, PERIODS),
        edge: run(kind, boundary(kind, PHI), PHI, None, PERIODS),
    }
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for kind in ModelKind::ALL {
        for phi in [PI / 6.0, PI / 3.0, PI / 2.0] {
            let expected = boundary(kind, phi);
            let mut last_topological = None;
            let mut found = None;
            for i in 0..=160 {
                let m = 0.05 * i as f64;
                match lattice_chern(kind, m, phi, 64).map(i32::abs) {
                    Some(1) => last_topological = Some(m),
                    Some(0) => {
                        if let Some(prev) = last_topological {
                            found = Some(0.5 * (prev + m));
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let ok = found.is_some_and(|m| within(m, expected, 0.1));
            pass &= ok;
            notes.push(format!("{}@{:.3}: {:?} vs {expected:.3}", kind.name(), phi, found.map(|m| (m * 1000.0).round() / 1000.0)));
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn criterion_2(bw: &Reference, hal: &Reference) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (kind, refs, t1, t2) in [(ModelKind::BrickWall, bw, 1.97, -1.97), (ModelKind::Haldane, hal, 1.96, -1.94)] {
        let f = refs.topo.fit;
        let slopes = within(f.slope1, t1, 0.2) && within(f.slope2, t2, 0.2);
        let trivial = refs.trivial.fit.slope1.abs() < 0.2 && refs.trivial.fit.slope2.abs() < 0.2;
        let e = refs.edge.fit;
        let drop1 = f.r2_1 - e.r2_1;
        let drop2 = f.r2_2 - e.r2_2;
        let r2 = drop1 >= 0.2 && drop2 >= 0.2;
        pass &= slopes && trivial && r2;
        notes.push(format!(
            "{}: M=1 {:+.3}/{:+.3} (target {t1:+.2}/{t2:+.2}) {}; M=6 {:+.3}/{:+.3} {}; R² drop {:.3}/{:.3} {}",
            kind.name(),
            f.slope1,
            f.slope2,
            ok(slopes),
            refs.trivial.fit.slope1,
            refs.trivial.fit.slope2,
            ok(trivial),
            drop1,
            drop2,
            ok(r2),
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "out"
    }
}

fn criterion_3(completeness: &mut Vec<f64>) -> Outcome {
    let cfg = DriveConfig::reference(1.0);
    let diss = DissipationConfig::reference(cfg.omega_r);
    let mut notes = Vec::new();

    let bw = run(ModelKind::BrickWall, 1.0, PHI, Some(&diss), PERIODS);
    let bw_ok = within(bw.fit.slope1, 2.00, 0.25) && within(bw.fit.slope2, -2.02, 0.25);
    notes.push(format!("brick-wall M=1 {:+.3}/{:+.3} (target +2.00/-2.02) {}", bw.fit.slope1, bw.fit.slope2, ok(bw_ok)));

    let hal = run(ModelKind::Haldane, 1.0, PHI, Some(&diss), PERIODS);
    let hal_ok = within(hal.fit.slope1.abs(), 2.60, 0.35) && within(hal.fit.slope2.abs(), 2.60, 0.35);
    notes.push(format!("haldane M=1 |{:.3}|/|{:.3}| (target 2.60) {}", hal.fit.slope1, hal.fit.slope2, ok(hal_ok)));

    let mut trivial_ok = true;
    for kind in ModelKind::ALL {
        let r = run(kind, 6.0, PHI, Some(&diss), PERIODS);
        let good = r.fit.slope1.abs() < 0.25 && r.fit.slope2.abs() < 0.25;
        trivial_ok &= good;
        notes.push(format!("{} M=6 {:+.3}/{:+.3} {}", kind.name(), r.fit.slope1, r.fit.slope2, ok(good)));
        completeness.push(r.completeness);
    }
    completeness.extend([bw.completeness, hal.completeness]);
    Outcome::new(bw_ok && hal_ok && trivial_ok, notes.join("; "))
}

fn criterion_4(bw: &Reference, hal: &Reference, completeness: &[f64]) -> Outcome {
    let points = [(1.0, PI / 2.0), (-1.0, PI / 2.0), (0.5, PI / 3.0), (1.0, -PI / 2.0), (0.0, 2.0 * PI / 3.0)];
    let mut pass = true;
    let mut worst_completeness: f64 = completeness.iter().cloned().fold(0.0, f64::max);
    let mut notes = Vec::new();
    for (kind, refs) in [(ModelKind::BrickWall, bw), (ModelKind::Haldane, hal)] {
        for r in [&refs.topo, &refs.trivial, &refs.edge] {
            worst_completeness = worst_completeness.max(r.completeness);
        }
        let mut cells = Vec::new();
        for &(m, phi) in &points {
            let cfg = DriveConfig::reference(m);
            let c = sweep::synthesized_chern(kind, &cfg, phi, 64).expect("interior point is gapped");
            let r = if m == 1.0 && phi == PHI { None } else { Some(run(kind, m, phi, None, PERIODS)) };
            let fit = r.as_ref().map_or(refs.topo.fit, |r| r.fit);
            if let Some(r) = &r {
                worst_completeness = worst_completeness.max(r.completeness);
            }
            let target = 2.0 * c.abs() as f64;
            let good = c != 0 && within(fit.slope1.abs(), target, 0.3) && within(fit.slope2.abs(), target, 0.3);
            pass &= good;
            cells.push(format!("({m},{phi:.2}) C={c} {:+.2}/{:+.2}{}", fit.slope1, fit.slope2, if good { "" } else { "*" }));
        }
        notes.push(format!("{}: {}", kind.name(), cells.join(" ")));
    }
    let complete = worst_completeness < 1e-8;
    notes.push(format!("max tone completeness error {worst_completeness:.2e} {}", ok(complete)));
    Outcome::new(pass && complete, notes.join("; "))
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for kind in ModelKind::ALL {
        let cfg = DriveConfig::reference(0.0);
        let mut weights = Vec::new();
        for m in 1..=6 {
            let h = observables::density_of_states(kind, &cfg, PHI, m as f64, 96, 80).expect("dos");
            let w = h.density_at(3.0);
            let n = h.density.len();
            let even = (0..n).all(|i| (h.density[i] - h.density[n - 1 - i]).abs() <= 1e-12 * h.density[i].abs().max(1.0));
            let traceless = (0..16).all(|i| {
                let k = lattice::geometry(kind).bz_point(i as f64 / 16.0, (7 * i % 16) as f64 / 16.0);
                drive::hamiltonian_at_theta(kind, &cfg.with_mass(m as f64), PHI, k.x, k.y).trace().abs() < 1e-9
            });
            pass &= w > 0.0 && even && traceless;
            weights.push(format!("{w:.3}{}", if even && traceless { "" } else { "(odd)" }));
        }
        let mb = boundary(kind, PHI);
        let edge = observables::density_of_states(kind, &cfg, PHI, mb, 192, 80).expect("dos");
        let closed = edge.min_abs_energy < 0.05;
        pass &= closed;
        notes.push(format!(
            "{}: ρ(3) for M=1..6 [{}], boundary min|E| {:.2e} {}",
            kind.name(),
            weights.join(" "),
            edge.min_abs_energy,
            ok(closed)
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn coverage(traj: &Trajectory) -> f64 {
    observables::coverage_fraction(traj, DEFAULT_COVERAGE_BINS).fraction
}

fn criterion_6(bw: &Reference, hal: &Reference) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (kind, refs) in [(ModelKind::BrickWall, bw), (ModelKind::Haldane, hal)] {
        let topo = coverage(&refs.topo.traj);
        let trivial = coverage(&refs.trivial.traj);
        let series: Vec<f64> = [10.0, 20.0]
            .iter()
            .map(|&p| coverage(&run(kind, 1.0, PHI, None, p).traj))
            .chain(std::iter::once(topo))
            .collect();
        let monotone = series.windows(2).all(|w| w[1] >= w[0]);
        let good = topo > 0.95 && trivial < 0.5 * topo && monotone;
        pass &= good;
        notes.push(format!(
            "{}: topological {topo:.3} {}, trivial {trivial:.3} {}, T=10/20/30 {:.3}/{:.3}/{:.3} {}",
            kind.name(),
            ok(topo > 0.95),
            ok(trivial < 0.5 * topo),
            series[0],
            series[1],
            series[2],
            ok(monotone)
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

fn sum_slopes(cell: &sweep::SweepCell) -> f64 {
    (cell.fit.slope1 + cell.fit.slope2).abs()
}

fn criterion_7() -> Outcome {
    let spec = SweepSpec::reference(ModelKind::BrickWall, 10, 10, SweepMode::DrivenDissipative);
    let commensurate = sweep::commensurate_control(&spec).expect("commensurate sweep");
    let golden = sweep::sweep(&spec).expect("golden sweep");
    let broken = commensurate.cells.iter().map(sum_slopes).filter(|s| s.is_finite()).fold(0.0, f64::max);
    let interior: Vec<_> = golden.cells.iter().filter(|c| !c.is_boundary()).collect();
    let good = interior.iter().filter(|c| sum_slopes(c) < 0.15).count();
    let frac = good as f64 / interior.len().max(1) as f64;
    let pass = broken > 0.5 && frac >= 0.9;
    Outcome::new(
        pass,
        format!(
            "commensurate max |s1+s2| {broken:.3} {}; golden |s1+s2|<0.15 on {good}/{} interior cells ({:.0}%) {}",
            ok(broken > 0.5),
            interior.len(),
            100.0 * frac,
            ok(frac >= 0.9)
        ),
    )
}

/// Sign of a slope with a deadband of half a pumping quantum.
fn slope_sign(s: f64) -> i32 {
    if s.abs() < 1.0 {
        0
    } else {
        s.signum() as i32
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn criterion_8() -> (Outcome, SweepResult) {
    let spec = SweepSpec::reference(ModelKind::Haldane, 10, 10, SweepMode::DrivenDissipative);
    let res = sweep::sweep(&spec).expect("sweep");
    let mut matched = 0;
    let mut total = 0;
    let mut interior = Vec::new();
    let mut spikes: Vec<f64> = Vec::new();
    for cell in &res.cells {
        let peak = cell.fit.slope1.abs().max(cell.fit.slope2.abs());
        match cell.chern {
            CellChern::Value(c) => {
                total += 1;
                if cell.status == CellStatus::Ok && slope_sign(cell.fit.slope1) == c.signum() {
                    matched += 1;
                }
                if c != 0 && peak.is_finite() {
                    interior.push(cell.fit.slope1.abs());
                }
            }
            CellChern::Boundary => {
                if peak.is_finite() {
                    spikes.push(peak);
                }
            }
        }
    }
    let frac = matched as f64 / total.max(1) as f64;
    let interior_median = median(interior);
    let spike = spikes.iter().cloned().fold(0.0, f64::max);
    let spiky = spike >= 2.0 * interior_median;
    let pass = frac >= 0.9 && spiky;
    (
        Outcome::new(
            pass,
            format!(
                "sign match {matched}/{total} ({:.0}%) {}; largest boundary slope {spike:.3} vs interior median {interior_median:.3} {}",
                100.0 * frac,
                ok(frac >= 0.9),
                ok(spiky)
            ),
        ),
        res,
    )
}

fn criterion_9(bw: &Reference, hal: &Reference) -> Outcome {
    let mut notes = Vec::new();

    let drift = [bw, hal]
        .iter()
        .flat_map(|r| [&r.topo, &r.trivial, &r.edge])
        .flat_map(|r| r.traj.norm.iter())
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    let drift_ok = drift < 1e-6;
    notes.push(format!("norm drift {drift:.2e} {}", ok(drift_ok)));

    let kind = ModelKind::BrickWall;
    let cfg = DriveConfig::reference(1.0);
    let base = Schedule::periods(kind, &cfg, PHI, PERIODS);
    let fine = Schedule::new(base.duration, 0.5 * base.dt, 2 * base.decimate);
    let coarse_traj = &bw.topo.traj;
    let fine_traj = evolve::evolve_conservative(kind, &cfg, PHI, fine).expect("fine run");
    let last = |t: &Trajectory| (t.w1[t.len - 1], t.w2[t.len - 1]);
    let (a1, a2) = last(coarse_traj);
    let (b1, b2) = last(&fine_traj);
    let rel = ((a1 - b1) / b1).abs().max(((a2 - b2) / b2).abs());
    let halving_ok = rel < 1e-4 && coarse_traj.len == fine_traj.len;
    notes.push(format!("dt halving ΔW/W {rel:.2e} {}", ok(halving_ok)));

    let mut grad_err: f64 = 0.0;
    let h = 1e-5;
    for kind in ModelKind::ALL {
        for (i, &(t1, t2)) in [(0.3, -1.1), (2.0, 0.7), (-2.9, 2.4), (5.1, -4.2)].iter().enumerate() {
            let cfg = DriveConfig::reference(0.5 + i as f64);
            let phi = 0.4 + 0.6 * i as f64;
            let (g1, g2) = drive::theta_gradient(kind, &cfg, phi, t1, t2);
            let at = |a: f64, b: f64| drive::hamiltonian_at_theta(kind, &cfg, phi, a, b);
            let fd1 = (at(t1 + h, t2) - at(t1 - h, t2)) * (0.5 / h);
            let fd2 = (at(t1, t2 + h) - at(t1, t2 - h)) * (0.5 / h);
            let scale = g1.pauli_norm().max(g2.pauli_norm());
            grad_err = grad_err.max(g1.distance(&fd1) / scale).max(g2.distance(&fd2) / scale);
        }
    }
    let grad_ok = grad_err < 1e-6;
    notes.push(format!("∂H/∂θ vs FD {grad_err:.2e} {}", ok(grad_ok)));

    let gamma = 0.01;
    let lossy = DissipationConfig { gamma, gamma_e: 0.0, s_amp: 0.0, ..DissipationConfig::reference(cfg.omega_r) };
    let decay = evolve::evolve_driven_dissipative(kind, &cfg, PHI, &lossy, Schedule::periods(kind, &cfg, PHI, 5.0)).expect("decay run");
    let decay_err = decay
        .times
        .iter()
        .zip(&decay.norm)
        .map(|(t, n)| ((n - (-gamma * t).exp()) / (-gamma * t).exp()).abs())
        .fold(0.0, f64::max);
    let decay_ok = decay_err < 1e-6;
    notes.push(format!("γ-only decay {decay_err:.2e} {}", ok(decay_ok)));

    let small = |workers| SweepSpec {
        m_range: sweep::Axis::new(-4.0, 4.0, 3),
        phi_range: sweep::Axis::new(-2.0, 2.0, 3),
        periods: 3.0,
        workers: Some(workers),
        ..SweepSpec::reference(kind, 3, 3, SweepMode::DrivenDissipative)
    };
    let one = sweep::sweep(&small(1)).expect("sweep");
    let many = sweep::sweep(&small(4)).expect("sweep");
    let bits = |r: &SweepResult| -> Vec<u64> {
        r.cells.iter().flat_map(|c| [c.fit.slope1, c.fit.slope2, c.fit.r2_1, c.fit.r2_2]).map(f64::to_bits).collect()
    };
    let identical = bits(&one) == bits(&many);
    notes.push(format!("workers 1 vs 4 bit-identical {}", ok(identical)));

    Outcome::new(drift_ok && halving_ok && grad_ok && decay_ok && identical, notes.join("; "))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |id: usize, name: &'static str, o: Outcome| {
        println!("criterion {id} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    report(1, "phase boundaries", criterion_1());
    let bw = reference_runs(ModelKind::BrickWall);
    let hal = reference_runs(ModelKind::Haldane);
    report(2, "conservative pumping", criterion_2(&bw, &hal));
    let mut completeness = Vec::new();
    report(3, "driven-dissipative pumping", criterion_3(&mut completeness));
    report(4, "twice-Chern slopes", criterion_4(&bw, &hal, &completeness));
    report(5, "density of states", criterion_5());
    report(6, "Bloch coverage", criterion_6(&bw, &hal));
    report(7, "commensurate control", criterion_7());
    report(8, "phase-diagram agreement", criterion_8().0);
    report(9, "numerical hygiene", criterion_9(&bw, &hal));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.0} s{}",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!(", failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
