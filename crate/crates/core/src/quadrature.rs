//! Adaptive Gauss-Kronrod and fixed Gauss-Legendre quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Sub};

use crate::matrix::Matrix2;

/// Values that can be integrated: a vector space with a norm.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn scaled(self, k: f64) -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scaled(self, k: f64) -> Self {
        self * k
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Matrix2 {
    fn zero() -> Self {
        Matrix2::ZERO
    }
    fn scaled(self, k: f64) -> Self {
        self.scale(k)
    }
    fn norm(&self) -> f64 {
        self.max_abs()
    }
}

// Kronrod 15-point abscissae (positive half, descending) and weights; the
// embedded 7-point Gauss rule uses the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn kronrod15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc.scaled(WGK[7]);
    let mut gauss = fc.scaled(WG[3]);
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair.scaled(w);
        if i % 2 == 1 {
            gauss = gauss + pair.scaled(WG[i / 2]);
        }
    }
    let kronrod = kronrod.scaled(half);
    let gauss = gauss.scaled(half);
    let err = (kronrod - gauss).norm();
    (kronrod, err)
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive G7-K15 quadrature over the finite interval `[a, b]`,
/// optionally pre-split at `breakpoints` (kinks of the integrand).
pub fn integrate_with_breaks<V: QuadValue, F: FnMut(f64) -> V>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> QuadResult<V> {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|p| *p > a && *p < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        let (value, error) = kronrod15(&mut f, w[0], w[1]);
        evaluations += 15;
        total = total + value;
        total_err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    let target = |total: &V| opts.abs_tol.max(opts.rel_tol * total.norm());
    while total_err > target(&total) && heap.len() < opts.max_intervals {
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            heap.push(seg);
            break;
        }
        let (lv, le) = kronrod15(&mut f, seg.a, mid);
        let (rv, re) = kronrod15(&mut f, mid, seg.b);
        evaluations += 30;
        total = total - seg.value + lv + rv;
        total_err += le + re - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: rv,
            error: re,
        });
    }

    // Re-sum in interval order so the result does not depend on heap history.
    let mut segs: Vec<Segment<V>> = heap.into_vec();
    segs.sort_by(|l, r| l.a.total_cmp(&r.a));
    let value = segs.iter().fold(V::zero(), |acc, s| acc + s.value);
    let error: f64 = segs.iter().map(|s| s.error).sum();
    QuadResult {
        value,
        error,
        evaluations,
        converged: error <= target(&value),
    }
}

pub fn integrate<V: QuadValue, F: FnMut(f64) -> V>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> QuadResult<V> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Integral over `[a, inf)` via `x = a + u / (1 - u)`.
pub fn integrate_to_infinity<V: QuadValue, F: FnMut(f64) -> V>(
    mut f: F,
    a: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> QuadResult<V> {
    let ubreaks: Vec<f64> = breakpoints
        .iter()
        .filter(|p| **p > a)
        .map(|p| {
            let s = p - a;
            s / (1.0 + s)
        })
        .collect();
    integrate_with_breaks(
        |u: f64| {
            if u >= 1.0 {
                return V::zero();
            }
            let om = 1.0 - u;
            let x = a + u / om;
            let v = f(x);
            v.scaled(1.0 / (om * om))
        },
        0.0,
        1.0,
        &ubreaks,
        opts,
    )
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
