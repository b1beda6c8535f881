//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Panels are bisected in order of decreasing error estimate until the summed
//! estimate drops below the requested tolerance. Integrands with integrable
//! inverse-square-root endpoint singularities go through
//! [`integrate_turning`], which maps the endpoints with a cosine substitution.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_panels: 50_000 }
    }
}

impl QuadOptions {
    pub fn absolute(abs_tol: f64) -> Self {
        Self { abs_tol, rel_tol: 0.0, ..Self::default() }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self { abs_tol: 0.0, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let s = f1 + f2;
        kron = kron + s * w;
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).magnitude();
    (value, error)
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrate over consecutive intervals `points[i]..points[i+1]`; each break
/// starts a separate panel so that kinks never sit inside a Kronrod rule.
pub fn integrate_with_breaks<T, F>(f: F, points: &[f64], opts: QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = kronrod(&f, w[0], w[1]);
        total = total + v;
        total_err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    let span = points.last().copied().unwrap_or(0.0) - points.first().copied().unwrap_or(0.0);
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= tol {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > opts.max_panels || (worst.b - worst.a).abs() < 1e-15 * span.abs().max(1.0) {
            return Err(Error::Quadrature { estimate: total.magnitude(), error: total_err, tolerance: tol });
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated cancellation in the running total
    let mut value = T::zero();
    let mut error = 0.0;
    let panels = heap.len();
    for p in heap.into_iter() {
        value = value + p.value;
        error += p.error;
    }
    Ok(QuadResult { value, error, panels })
}

/// Integrate over `[a, b]` where either endpoint may be a simple turning point
/// at which the integrand behaves like `(x - a)^{-1/2}`.
///
/// The substitution `x = a + (b - a)(1 - cos θ)/2` (both ends), or its
/// one-sided variant, supplies a factor `sin θ` that cancels the singularity.
pub fn integrate_turning<T, F>(
    f: F,
    a: f64,
    b: f64,
    singular_a: bool,
    singular_b: bool,
    opts: QuadOptions,
) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let len = b - a;
    match (singular_a, singular_b) {
        (false, false) => integrate(f, a, b, opts),
        (true, true) => integrate(
            |t: f64| {
                let x = a + 0.5 * len * (1.0 - t.cos());
                f(x.clamp(a.min(b), a.max(b))) * (0.5 * len * t.sin())
            },
            0.0,
            std::f64::consts::PI,
            opts,
        ),
        (true, false) => integrate(
            |t: f64| {
                let x = a + len * (1.0 - t.cos());
                f(x) * (len * t.sin())
            },
            0.0,
            std::f64::consts::FRAC_PI_2,
            opts,
        ),
        (false, true) => integrate(
            |t: f64| {
                let x = b - len * (1.0 - t.cos());
                f(x) * (len * t.sin())
            },
            0.0,
            std::f64::consts::FRAC_PI_2,
            opts,
        ),
    }
}
