//! 2x2 real and complex matrices, and the kernel value type built on them.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Matrix2(pub [[f64; 2]; 2]);

impl Matrix2 {
    pub const ZERO: Matrix2 = Matrix2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Matrix2 = Matrix2([[1.0, 0.0], [0.0, 1.0]]);
    /// `diag(1, -1)`, the sign flip applied to mirrored kernels.
    pub const FLIP: Matrix2 = Matrix2([[1.0, 0.0], [0.0, -1.0]]);
    /// `diag(1, 0)`, the coefficient of the Dirac part.
    pub const DENSITY: Matrix2 = Matrix2([[1.0, 0.0], [0.0, 0.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Matrix2([[a11, a12], [a21, a22]])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Matrix2([[a, 0.0], [0.0, b]])
    }

    /// Flux matrix `[[0, 1], [c^2, 0]]` of the linearized system.
    pub fn flux(c: f64) -> Self {
        Matrix2([[0.0, 1.0], [c * c, 0.0]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn scale(&self, k: f64) -> Self {
        let m = self.0;
        Matrix2([[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]])
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Entries in row-major order: 11, 12, 21, 22.
    pub fn entries(&self) -> [f64; 4] {
        [self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]]
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|v| v.is_finite())
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.0[i]
    }

    pub fn column(&self, j: usize) -> [f64; 2] {
        [self.0[0][j], self.0[1][j]]
    }
}

impl Add for Matrix2 {
    type Output = Matrix2;
    fn add(self, o: Matrix2) -> Matrix2 {
        let (a, b) = (self.0, o.0);
        Matrix2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Matrix2 {
    fn add_assign(&mut self, o: Matrix2) {
        *self = *self + o;
    }
}

impl Sub for Matrix2 {
    type Output = Matrix2;
    fn sub(self, o: Matrix2) -> Matrix2 {
        self + (-o)
    }
}

impl Neg for Matrix2 {
    type Output = Matrix2;
    fn neg(self) -> Matrix2 {
        self.scale(-1.0)
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;
    fn mul(self, o: Matrix2) -> Matrix2 {
        let (a, b) = (self.0, o.0);
        Matrix2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<Matrix2> for f64 {
    type Output = Matrix2;
    fn mul(self, m: Matrix2) -> Matrix2 {
        m.scale(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CMatrix2(pub [[Complex64; 2]; 2]);

impl CMatrix2 {
    pub fn zero() -> Self {
        CMatrix2::default()
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        CMatrix2([[one, zero], [zero, one]])
    }

    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        CMatrix2([[a11, a12], [a21, a22]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let m = self.0;
        CMatrix2([[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]])
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn re(&self) -> Matrix2 {
        let m = self.0;
        Matrix2([[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]])
    }

    pub fn im(&self) -> Matrix2 {
        let m = self.0;
        Matrix2([[m[0][0].im, m[0][1].im], [m[1][0].im, m[1][1].im]])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.norm()))
    }

    /// Right multiplication by a real diagonal matrix.
    pub fn mul_diag(&self, d0: f64, d1: f64) -> Self {
        let m = self.0;
        CMatrix2([[m[0][0] * d0, m[0][1] * d1], [m[1][0] * d0, m[1][1] * d1]])
    }
}

impl Add for CMatrix2 {
    type Output = CMatrix2;
    fn add(self, o: CMatrix2) -> CMatrix2 {
        let (a, b) = (self.0, o.0);
        CMatrix2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for CMatrix2 {
    type Output = CMatrix2;
    fn sub(self, o: CMatrix2) -> CMatrix2 {
        self + o.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for CMatrix2 {
    type Output = CMatrix2;
    fn mul(self, o: CMatrix2) -> CMatrix2 {
        let (a, b) = (self.0, o.0);
        CMatrix2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl From<Matrix2> for CMatrix2 {
    fn from(m: Matrix2) -> Self {
        let c = |v: f64| Complex64::new(v, 0.0);
        CMatrix2([[c(m.0[0][0]), c(m.0[0][1])], [c(m.0[1][0]), c(m.0[1][1])]])
    }
}

/// A Dirac contribution `weight * delta(x - location)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTerm {
    pub location: f64,
    pub weight: Matrix2,
}

/// Value of a Green's-function evaluator: a smooth density plus Dirac parts.
///
/// The smooth part is what every pointwise bound is stated for; the deltas
/// carry the exponentially decaying short-wave component.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub smooth: Matrix2,
    pub deltas: Vec<DeltaTerm>,
}

impl KernelValue {
    pub fn smooth(smooth: Matrix2) -> Self {
        KernelValue {
            smooth,
            deltas: Vec::new(),
        }
    }

    /// Adds a Dirac term, merging weights when the location is already present.
    pub fn push_delta(&mut self, location: f64, weight: Matrix2) {
        if let Some(d) = self.deltas.iter_mut().find(|d| d.location == location) {
            d.weight += weight;
        } else {
            self.deltas.push(DeltaTerm { location, weight });
        }
    }

    pub fn total_delta_weight(&self) -> Matrix2 {
        self.deltas
            .iter()
            .fold(Matrix2::ZERO, |acc, d| acc + d.weight)
    }
}
