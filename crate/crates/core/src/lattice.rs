//! Haldane and brick-wall Haldane lattices: hopping geometry, Bloch
//! Hamiltonians, analytic phase boundaries and a plaquette Chern-number oracle.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hermitian::{inner, Hermitian2, Spinor};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("band gap {gap:e} below tolerance at k = ({kx}, {ky})")]
    GapClosed { kx: f64, ky: f64, gap: f64 },
    #[error("Berry flux sum {value} is not within 0.01 of an integer")]
    NotInteger { value: f64 },
    #[error("Chern grid must be at least 16 per side, got {0}")]
    GridTooCoarse(usize),
    #[error("Bravais vectors are degenerate")]
    DegenerateLattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Haldane,
    BrickWall,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Haldane, ModelKind::BrickWall];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Haldane => "haldane",
            ModelKind::BrickWall => "brickwall",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "haldane" => Ok(ModelKind::Haldane),
            "brickwall" | "bwh" | "brickwallhaldane" => Ok(ModelKind::BrickWall),
            other => Err(format!("unknown model kind '{other}' (expected haldane | brickwall)")),
        }
    }
}

/// Plain 2D vector in lattice units (or radians per lattice unit for k).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    pub kind: ModelKind,
    /// Nearest-neighbour hopping vectors a₁, a₂, a₃.
    pub nn: [Vec2; 3],
    /// Next-nearest-neighbour hopping vectors b₁, b₂ (, b₃).
    pub nnn: Vec<Vec2>,
    /// Bravais vectors A₁ = a₁ − a₂, A₂ = a₂ − a₃.
    pub lattice: [Vec2; 2],
    /// Reciprocal vectors with Gᵢ·Aⱼ = 2πδᵢⱼ.
    pub reciprocal: [Vec2; 2],
}

impl LatticeGeometry {
    /// Area of the Brillouin-zone parallelogram spanned by G₁, G₂.
    pub fn bz_area(&self) -> f64 {
        self.reciprocal[0].cross(self.reciprocal[1]).abs()
    }

    /// Point of the BZ parallelogram at fractional coordinates `(c1, c2)`.
    pub fn bz_point(&self, c1: f64, c2: f64) -> Vec2 {
        self.reciprocal[0] * c1 + self.reciprocal[1] * c2
    }
}

fn nn_vectors(kind: ModelKind) -> [Vec2; 3] {
    match kind {
        ModelKind::Haldane => [
            Vec2::new(SQRT3 / 2.0, 0.5),
            Vec2::new(-SQRT3 / 2.0, 0.5),
            Vec2::new(0.0, -1.0),
        ],
        ModelKind::BrickWall => [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, -1.0)],
    }
}

fn bravais(kind: ModelKind) -> [Vec2; 2] {
    let a = nn_vectors(kind);
    [a[0] - a[1], a[1] - a[2]]
}

/// Exact hopping geometry of either model.
pub fn geometry(kind: ModelKind) -> LatticeGeometry {
    let a = nn_vectors(kind);
    let b1 = a[1] - a[2];
    let b2 = a[2] - a[0];
    let nnn = match kind {
        ModelKind::Haldane => vec![b1, b2, a[0] - a[1]],
        // the brick-wall geometry removes b₃ = a₁ − a₂
        ModelKind::BrickWall => vec![b1, b2],
    };
    let reciprocal = reciprocal_vectors(kind).expect("built-in lattices are non-degenerate");
    LatticeGeometry { kind, nn: a, nnn, lattice: bravais(kind), reciprocal }
}

/// Solves `Gᵢ·Aⱼ = 2πδᵢⱼ` for the model's Bravais vectors.
pub fn reciprocal_vectors(kind: ModelKind) -> Result<[Vec2; 2], LatticeError> {
    reciprocal_of(bravais(kind))
}

fn reciprocal_of([a1, a2]: [Vec2; 2]) -> Result<[Vec2; 2], LatticeError> {
    let det = a1.cross(a2);
    if det.abs() < 1e-12 {
        return Err(LatticeError::DegenerateLattice);
    }
    let s = 2.0 * PI / det;
    Ok([Vec2::new(a2.y * s, -a2.x * s), Vec2::new(-a1.y * s, a1.x * s)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaldaneParams {
    /// Sublattice mass.
    pub mass: f64,
    /// NNN flux φ in radians.
    pub phi: f64,
    pub t1: f64,
    pub t2: f64,
}

impl HaldaneParams {
    pub fn new(mass: f64, phi: f64) -> Self {
        Self { mass, phi, t1: 1.0, t2: 1.0 }
    }
}

/// Coefficients of `ε(k)·I + d(k)·σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DVector {
    pub eps: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl DVector {
    pub fn norm(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy + self.dz * self.dz).sqrt()
    }

    /// Full Bloch matrix including the identity shift.
    pub fn hamiltonian(&self) -> Hermitian2 {
        Hermitian2::new(self.eps, self.dx, self.dy, self.dz)
    }
}

/// Bloch vector of the model at quasi-momentum `k`.
///
/// The NNN σz term carries the conventional factor of two,
/// `dz = M − 2 t₂ sin φ Σ sin(k·bᵢ)`, so that the gap closes at
/// `M/t₂ = ±3√3 sin φ` (Haldane) and `±2√3 sin φ` (brick-wall).
pub fn d_vector(kind: ModelKind, params: &HaldaneParams, k: Vec2) -> DVector {
    let a = nn_vectors(kind);
    let (mut dx, mut dy) = (0.0, 0.0);
    for ai in a {
        let (s, c) = k.dot(ai).sin_cos();
        dx += c;
        dy += s;
    }
    let b1 = a[1] - a[2];
    let b2 = a[2] - a[0];
    let mut sum_cos = 0.0;
    let mut sum_sin = 0.0;
    let mut accumulate = |b: Vec2| {
        let (s, c) = k.dot(b).sin_cos();
        sum_sin += s;
        sum_cos += c;
    };
    accumulate(b1);
    accumulate(b2);
    if kind == ModelKind::Haldane {
        accumulate(a[0] - a[1]);
    }
    let (sphi, cphi) = params.phi.sin_cos();
    DVector {
        eps: 2.0 * params.t2 * cphi * sum_cos,
        dx: params.t1 * dx,
        dy: params.t1 * dy,
        dz: params.mass - 2.0 * params.t2 * sphi * sum_sin,
    }
}

/// Bloch Hamiltonian map for the oracle (identity shift included; the
/// oracle ignores it).
pub fn bloch_hamiltonian(kind: ModelKind, params: HaldaneParams) -> impl Fn(Vec2) -> Hermitian2 {
    move |k| d_vector(kind, &params, k).hamiltonian()
}

/// `(+M_b, −M_b)` with `M_b = 3√3 sin φ` (Haldane) or `2√3 sin φ` (brick-wall).
pub fn phase_boundary(kind: ModelKind, phi: f64) -> (f64, f64) {
    let scale = match kind {
        ModelKind::Haldane => 3.0 * SQRT3,
        ModelKind::BrickWall => 2.0 * SQRT3,
    };
    let mb = scale * phi.sin();
    (mb, -mb)
}

pub const GAP_TOLERANCE: f64 = 1e-9;
pub const INTEGER_TOLERANCE: f64 = 0.01;

/// Chern number of the lower band of `h` over the BZ parallelogram spanned by
/// `geometry.reciprocal`, from the product of U(1) link variables around each
/// of `grid_n²` plaquettes.
pub fn chern_number<F>(h: F, geometry: &LatticeGeometry, grid_n: usize) -> Result<i32, LatticeError>
where
    F: Fn(Vec2) -> Hermitian2,
{
    let value = berry_flux(&h, geometry, grid_n)?;
    let rounded = value.round();
    if (value - rounded).abs() >= INTEGER_TOLERANCE {
        return Err(LatticeError::NotInteger { value });
    }
    Ok(rounded as i32)
}

/// Total lower-band Berry flux divided by 2π (not rounded).
pub fn berry_flux<F>(h: &F, geometry: &LatticeGeometry, grid_n: usize) -> Result<f64, LatticeError>
where
    F: Fn(Vec2) -> Hermitian2,
{
    if grid_n < 16 {
        return Err(LatticeError::GridTooCoarse(grid_n));
    }
    let n = grid_n;
    let step = 1.0 / n as f64;
    // Both models are periodic over the BZ only up to a constant diagonal
    // unitary, so the far edges are evaluated at k + G rather than wrapped.
    // Link products are invariant under a constant unitary, which keeps the
    // plaquette sum an exact multiple of 2π.
    let side = n + 1;
    let mut states: Vec<Spinor> = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let k = geometry.bz_point(i as f64 * step, j as f64 * step);
            let hk = h(k);
            let gap = 2.0 * hk.pauli_norm();
            if gap < GAP_TOLERANCE {
                return Err(LatticeError::GapClosed { kx: k.x, ky: k.y, gap });
            }
            states.push(hk.lower_eigenvector().expect("gap checked above"));
        }
    }
    let at = |i: usize, j: usize| &states[i * side + j];
    let link = |a: &Spinor, b: &Spinor| {
        let z = inner(a, b);
        z / z.norm()
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u00 = at(i, j);
            let u10 = at(i + 1, j);
            let u11 = at(i + 1, j + 1);
            let u01 = at(i, j + 1);
            let loop_product: C64 =
                link(u00, u10) * link(u10, u11) * link(u11, u01) * link(u01, u00);
            total += loop_product.arg();
        }
    }
    // G₁×G₂ > 0 for both lattices, so (c1, c2) order is positively oriented.
    let orientation = geometry.reciprocal[0].cross(geometry.reciprocal[1]).signum();
    Ok(orientation * total / (2.0 * PI))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn haldane_first_nn_vector() {
        let g = geometry(ModelKind::Haldane);
        assert_abs_diff_eq!(g.nn[0].x, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.nn[0].y, 0.5, epsilon = 1e-15);
        assert_eq!(g.nnn.len(), 3);
    }

    #[test]
    fn brick_wall_drops_third_nnn_bond() {
        let g = geometry(ModelKind::BrickWall);
        assert_eq!(g.nnn.len(), 2);
        assert_eq!(g.nnn[0], Vec2::new(-1.0, 1.0));
        assert_eq!(g.nnn[1], Vec2::new(-1.0, -1.0));
    }

    #[test]
    fn third_nn_vector_has_unit_length() {
        for kind in ModelKind::ALL {
            assert_eq!(geometry(kind).nn[2].norm(), 1.0);
        }
    }

    #[test]
    fn reciprocal_duality() {
        for kind in ModelKind::ALL {
            let g = geometry(kind);
            for i in 0..2 {
                assert!(g.reciprocal[i].norm() > 0.0);
                for j in 0..2 {
                    let expect = if i == j { 2.0 * PI } else { 0.0 };
                    assert_abs_diff_eq!(g.reciprocal[i].dot(g.lattice[j]), expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn reciprocal_vectors_match_hand_solution() {
        // Haldane: A₁ = (√3, 0), A₂ = (−√3/2, 3/2)
        //   G₁ = (2π/√3, 2π/3), G₂ = (0, 4π/3)
        let [g1, g2] = reciprocal_vectors(ModelKind::Haldane).unwrap();
        assert_abs_diff_eq!(g1.x, 2.0 * PI / 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(g1.y, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g2.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g2.y, 4.0 * PI / 3.0, epsilon = 1e-12);
        // Brick-wall: A₁ = (2, 0), A₂ = (−1, 1)
        //   G₁ = (π, π), G₂ = (0, 2π)
        let g = geometry(ModelKind::BrickWall);
        assert_eq!(g.lattice, [Vec2::new(2.0, 0.0), Vec2::new(-1.0, 1.0)]);
        let [g1, g2] = g.reciprocal;
        assert_abs_diff_eq!(g1.x, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g1.y, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g2.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g2.y, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_bravais_vectors_rejected() {
        let r = reciprocal_of([Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)]);
        assert_eq!(r, Err(LatticeError::DegenerateLattice));
    }

    #[test]
    fn d_vector_at_gamma() {
        let phi = 0.7;
        let d = d_vector(ModelKind::Haldane, &HaldaneParams::new(1.3, phi), Vec2::default());
        assert_abs_diff_eq!(d.eps, 6.0 * phi.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.dx, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.dy, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.dz, 1.3, epsilon = 1e-14);
    }

    #[test]
    fn haldane_gap_closes_at_boundary_mass() {
        // dense-grid minimisation of |d| over the BZ parallelogram
        let g = geometry(ModelKind::Haldane);
        let p = HaldaneParams::new(3.0 * 3f64.sqrt(), PI / 2.0);
        let n = 300;
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let k = g.bz_point(i as f64 / n as f64, j as f64 / n as f64);
                min = min.min(d_vector(ModelKind::Haldane, &p, k).norm());
            }
        }
        assert!(min < 1e-12, "min |d| = {min}");
    }

    #[test]
    fn boundary_values() {
        let (p, m) = phase_boundary(ModelKind::Haldane, PI / 2.0);
        assert_abs_diff_eq!(p, 5.196_152_422_706_632, epsilon = 1e-12);
        assert_abs_diff_eq!(m, -p);
        let (p, _) = phase_boundary(ModelKind::BrickWall, PI / 2.0);
        assert_abs_diff_eq!(p, 3.464_101_615_137_754_5, epsilon = 1e-12);
        for kind in ModelKind::ALL {
            let (p, m) = phase_boundary(kind, 0.0);
            assert_eq!(p, 0.0);
            assert_eq!(m, 0.0);
        }
    }

    fn chern(kind: ModelKind, mass: f64, phi: f64, n: usize) -> Result<i32, LatticeError> {
        chern_number(bloch_hamiltonian(kind, HaldaneParams::new(mass, phi)), &geometry(kind), n)
    }

    #[test]
    fn haldane_topological_point() {
        let c64 = chern(ModelKind::Haldane, 1.0, PI / 2.0, 64).unwrap();
        let c128 = chern(ModelKind::Haldane, 1.0, PI / 2.0, 128).unwrap();
        assert_eq!(c64.abs(), 1);
        assert_eq!(c64, c128);
        // sign fixed once by the oracle itself
        assert_eq!(c64, -1);
    }

    #[test]
    fn trivial_points() {
        assert_eq!(chern(ModelKind::Haldane, 6.0, PI / 2.0, 64), Ok(0));
        let flat = HaldaneParams { mass: 1.0, phi: PI / 2.0, t1: 1.0, t2: 0.0 };
        for kind in ModelKind::ALL {
            let c = chern_number(bloch_hamiltonian(kind, flat), &geometry(kind), 32);
            assert_eq!(c, Ok(0));
        }
    }

    #[test]
    fn gap_closure_is_reported() {
        // Γ-point gap of the flat-mass model closes when M = 0, φ = 0 at the K point
        let r = chern(ModelKind::Haldane, 0.0, 0.0, 48);
        assert!(matches!(r, Err(LatticeError::GapClosed { .. })), "{r:?}");
        assert_eq!(chern(ModelKind::Haldane, 1.0, 1.0, 8), Err(LatticeError::GridTooCoarse(8)));
    }

    #[test]
    fn boundary_consistency_scan() {
        for kind in ModelKind::ALL {
            for phi in [PI / 6.0, PI / 3.0, PI / 2.0] {
                let (mb, _) = phase_boundary(kind, phi);
                let mut last_topological = None;
                let mut m = 0.025;
                while m < 8.0 {
                    if let Ok(c) = chern(kind, m, phi, 64) {
                        if c != 0 {
                            last_topological = Some(m);
                        }
                    }
                    m += 0.05;
                }
                let found = last_topological.unwrap();
                assert!((found - mb).abs() < 0.05 + 1e-9, "{kind} φ={phi}: {found} vs {mb}");
            }
        }
    }

    #[test]
    fn flux_antisymmetry() {
        for kind in ModelKind::ALL {
            for (m, phi) in [(0.5, PI / 2.0), (1.0, 1.0), (-1.0, 2.0)] {
                assert_eq!(chern(kind, m, -phi, 48).unwrap(), -chern(kind, m, phi, 48).unwrap());
            }
        }
    }


    /// `H(k + G) = U H(k) U†` with `U` a fixed rotation about σz, checked
    /// against the rotation seen at `reference`.
    pub(crate) fn sigma_z_rotation_matches<F: Fn(Vec2) -> Hermitian2>(h: &F, k: Vec2, g: Vec2, reference: Vec2) -> bool {
        let (a, b) = (h(k), h(k + g));
        let (ra, rb) = (h(reference), h(reference + g));
        let rot = |p: &Hermitian2, q: &Hermitian2| C64::new(q.x, q.y) / C64::new(p.x, p.y);
        let mag = (a.x.hypot(a.y) - b.x.hypot(b.y)).abs();
        if (a.z - b.z).abs() > 1e-10 || mag > 1e-10 {
            return false;
        }
        if a.x.hypot(a.y) < 1e-6 {
            return true;
        }
        (rot(&a, &b) - rot(&ra, &rb)).norm() < 1e-8
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn bloch_hamiltonian_is_reciprocal_periodic_up_to_a_unitary(kx in -10.0..10.0f64, ky in -10.0..10.0f64,
                                                                   m in -6.0..6.0f64, phi in -PI..PI) {
            for kind in ModelKind::ALL {
                let g = geometry(kind);
                let h = bloch_hamiltonian(kind, HaldaneParams::new(m, phi));
                let k = Vec2::new(kx, ky);
                let origin = Vec2::new(0.0, 0.0);
                for gi in g.reciprocal {
                    prop_assert!(sigma_z_rotation_matches(&h, k, gi, origin));
                }
            }
        }

        #[test]
        fn zero_flux_mass_is_constant(kx in -10.0..10.0f64, ky in -10.0..10.0f64, m in -6.0..6.0f64) {
            for kind in ModelKind::ALL {
                let d = d_vector(kind, &HaldaneParams::new(m, 0.0), Vec2::new(kx, ky));
                prop_assert_eq!(d.dz, m);
            }
        }
    }
}
