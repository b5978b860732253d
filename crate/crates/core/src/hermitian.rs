//! 2×2 Hermitian operators in the Pauli basis and two-component spinors.

use num_complex::Complex64 as C64;

/// Two-component complex amplitude vector.
pub type Spinor = [C64; 2];

/// A 2×2 Hermitian matrix `id·I + x·σx + y·σy + z·σz`.
///
/// Basis order is `(b₁, b₂)`, so `σy = −i(b₁†b₂ − b₂†b₁)` is the usual
/// `[[0, −i], [i, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hermitian2 {
    pub id: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Hermitian2 {
    pub const fn new(id: f64, x: f64, y: f64, z: f64) -> Self {
        Self { id, x, y, z }
    }

    pub const fn traceless(x: f64, y: f64, z: f64) -> Self {
        Self { id: 0.0, x, y, z }
    }

    /// Dense matrix form.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        [
            [C64::new(self.id + self.z, 0.0), C64::new(self.x, -self.y)],
            [C64::new(self.x, self.y), C64::new(self.id - self.z, 0.0)],
        ]
    }

    /// Recovers the Pauli coefficients from a dense matrix. The anti-Hermitian
    /// part, if any, is discarded.
    pub fn from_matrix(m: &[[C64; 2]; 2]) -> Self {
        let off = (m[1][0] + m[0][1].conj()) * 0.5;
        Self {
            id: 0.5 * (m[0][0].re + m[1][1].re),
            x: off.re,
            y: off.im,
            z: 0.5 * (m[0][0].re - m[1][1].re),
        }
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.id
    }

    /// `|d|` for the traceless part.
    pub fn pauli_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Frobenius norm of the difference.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = *self - *other;
        (2.0 * (d.id * d.id + d.x * d.x + d.y * d.y + d.z * d.z)).sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = self.pauli_norm();
        (self.id - r, self.id + r)
    }

    /// Normalized eigenvector of the lower eigenvalue, in an arbitrary gauge.
    /// Returns `None` when the two eigenvalues coincide.
    pub fn lower_eigenvector(&self) -> Option<Spinor> {
        let r = self.pauli_norm();
        if r == 0.0 {
            return None;
        }
        // Two algebraically equivalent forms; pick the one that does not
        // vanish near the poles of d̂.
        let v = if self.z > 0.0 {
            [C64::new(self.x, -self.y), C64::new(-(r + self.z), 0.0)]
        } else {
            [C64::new(self.z - r, 0.0), C64::new(self.x, self.y)]
        };
        Some(normalized(&v))
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        let off_up = C64::new(self.x, -self.y);
        let off_dn = C64::new(self.x, self.y);
        [
            v[0] * (self.id + self.z) + off_up * v[1],
            off_dn * v[0] + v[1] * (self.id - self.z),
        ]
    }

    /// `ψ† H ψ` (not divided by the norm).
    pub fn sandwich(&self, v: &Spinor) -> f64 {
        let [sx, sy, sz] = pauli_moments(v);
        let n = norm_sqr(v);
        self.id * n + self.x * sx + self.y * sy + self.z * sz
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, v: &Spinor) -> f64 {
        self.sandwich(v) / norm_sqr(v)
    }
}

impl std::ops::Add for Hermitian2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.id + o.id, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Hermitian2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.id - o.id, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Hermitian2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.id * s, self.x * s, self.y * s, self.z * s)
    }
}

/// Unnormalized `(ψ†σxψ, ψ†σyψ, ψ†σzψ)`.
#[inline]
pub fn pauli_moments(v: &Spinor) -> [f64; 3] {
    let c = v[0].conj() * v[1];
    [
        2.0 * c.re,
        2.0 * c.im,
        v[0].norm_sqr() - v[1].norm_sqr(),
    ]
}

#[inline]
pub fn norm_sqr(v: &Spinor) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

pub fn norm(v: &Spinor) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn normalized(v: &Spinor) -> Spinor {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// `⟨a|b⟩`.
pub fn inner(a: &Spinor, b: &Spinor) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}
