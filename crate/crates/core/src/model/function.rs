//! Piecewise-smooth 2π-periodic functions with closed-form derivatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::TWO_PI;

/// Highest derivative order the closed-form representation is asked for.
pub const MAX_DERIVATIVE_ORDER: u32 = 12;

const CONTINUITY_TOL: f64 = 1e-10;
const LOCATION_TOL: f64 = 1e-12;

/// `a cos(ωx) + b sin(ωx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub omega: f64,
    pub cos: f64,
    pub sin: f64,
}

impl Harmonic {
    pub fn cosine(omega: f64, amplitude: f64) -> Self {
        Self { omega, cos: amplitude, sin: 0.0 }
    }

    pub fn sine(omega: f64, amplitude: f64) -> Self {
        Self { omega, cos: 0.0, sin: amplitude }
    }

    fn derivative(&self, x: f64, order: u32) -> f64 {
        let (c, s) = ((self.omega * x).cos(), (self.omega * x).sin());
        let scale = self.omega.powi(order as i32);
        let (dc, ds) = match order % 4 {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        };
        scale * (self.cos * dc + self.sin * ds)
    }
}

/// A smooth function `Σ c_i (x − origin)^i + Σ harmonics`, differentiable in
/// closed form to any order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SmoothFn {
    pub origin: f64,
    pub poly: Vec<f64>,
    pub harmonics: Vec<Harmonic>,
}

impl SmoothFn {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { origin: 0.0, poly: vec![c], harmonics: Vec::new() }
    }

    pub fn polynomial(origin: f64, coeffs: Vec<f64>) -> Self {
        Self { origin, poly: coeffs, harmonics: Vec::new() }
    }

    pub fn trig(constant: f64, harmonics: Vec<Harmonic>) -> Self {
        Self { origin: 0.0, poly: vec![constant], harmonics }
    }

    /// `cos^k(x)` expanded into a cosine series.
    pub fn cos_power(k: u32) -> Self {
        // cos^k x = 2^{-k} Σ_j C(k, j) cos((k − 2j) x)
        let mut constant = 0.0;
        let mut harmonics: Vec<Harmonic> = Vec::new();
        let scale = 0.5f64.powi(k as i32);
        let mut binom = 1.0;
        for j in 0..=k {
            let freq = k as i64 - 2 * j as i64;
            let w = scale * binom;
            if freq == 0 {
                constant += w;
            } else {
                let omega = freq.unsigned_abs() as f64;
                if let Some(h) = harmonics.iter_mut().find(|h| h.omega == omega) {
                    h.cos += w;
                } else {
                    harmonics.push(Harmonic::cosine(omega, w));
                }
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        Self::trig(constant, harmonics)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            origin: self.origin,
            poly: self.poly.iter().map(|c| c * s).collect(),
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic { omega: h.omega, cos: h.cos * s, sin: h.sin * s })
                .collect(),
        }
    }

    /// Pointwise sum; both operands must share the polynomial origin unless
    /// one of them has no polynomial part.
    pub fn add(&self, other: &SmoothFn) -> Self {
        let origin = if self.poly.iter().any(|&c| c != 0.0) { self.origin } else { other.origin };
        let shifted = |f: &SmoothFn| -> Vec<f64> {
            if f.poly.iter().skip(1).all(|&c| c == 0.0) || f.origin == origin {
                f.poly.clone()
            } else {
                shift_polynomial(&f.poly, f.origin, origin)
            }
        };
        let a = shifted(self);
        let b = shifted(other);
        let mut poly = vec![0.0; a.len().max(b.len())];
        for (i, c) in a.iter().enumerate() {
            poly[i] += c;
        }
        for (i, c) in b.iter().enumerate() {
            poly[i] += c;
        }
        let mut harmonics = self.harmonics.clone();
        harmonics.extend(other.harmonics.iter().copied());
        Self { origin, poly, harmonics }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let t = x - self.origin;
        let n = order as usize;
        let mut acc = 0.0;
        for i in (n..self.poly.len()).rev() {
            acc = acc * t + self.poly[i] * falling_factorial(i, n);
        }
        acc + self.harmonics.iter().map(|h| h.derivative(x, order)).sum::<f64>()
    }

    /// `∫_a^b f(x) e^{-imx} dx` in closed form.
    pub fn integral_exp(&self, a: f64, b: f64, m: f64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        if self.poly.iter().any(|&c| c != 0.0) {
            let ta = a - self.origin;
            let tb = b - self.origin;
            let phase = Complex64::from_polar(1.0, -m * self.origin);
            if m == 0.0 {
                let prim = |t: f64| -> f64 {
                    self.poly.iter().enumerate().map(|(i, c)| c * t.powi(i as i32 + 1) / (i as f64 + 1.0)).sum()
                };
                total += phase * (prim(tb) - prim(ta));
            } else {
                let beta = Complex64::new(0.0, -m);
                let prim = |t: f64| -> Complex64 {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (i, &c) in self.poly.iter().enumerate() {
                        if c == 0.0 {
                            continue;
                        }
                        let mut inner = Complex64::new(0.0, 0.0);
                        let mut bpow = beta;
                        for l in 0..=i {
                            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                            inner += sign * falling_factorial(i, l) * t.powi((i - l) as i32) / bpow;
                            bpow *= beta;
                        }
                        s += c * inner;
                    }
                    (beta * t).exp() * s
                };
                total += phase * (prim(tb) - prim(ta));
            }
        }
        for h in &self.harmonics {
            // a cos ωx + b sin ωx = ½(a − ib) e^{iωx} + ½(a + ib) e^{−iωx}
            let plus = Complex64::new(0.5 * h.cos, -0.5 * h.sin);
            let minus = Complex64::new(0.5 * h.cos, 0.5 * h.sin);
            total += plus * exp_integral(h.omega - m, a, b) + minus * exp_integral(-h.omega - m, a, b);
        }
        total
    }
}

fn exp_integral(delta: f64, a: f64, b: f64) -> Complex64 {
    if delta.abs() < 1e-14 {
        Complex64::new(b - a, 0.0)
    } else {
        (Complex64::from_polar(1.0, delta * b) - Complex64::from_polar(1.0, delta * a)) / Complex64::new(0.0, delta)
    }
}

fn falling_factorial(i: usize, n: usize) -> f64 {
    (0..n).map(|j| (i - j) as f64).product()
}

fn shift_polynomial(coeffs: &[f64], from: f64, to: f64) -> Vec<f64> {
    // Σ c_i (x − from)^i = Σ d_j (x − to)^j with x − from = (x − to) + (to − from)
    let h = to - from;
    let n = coeffs.len();
    let mut out = vec![0.0; n];
    for (i, &c) in coeffs.iter().enumerate() {
        let mut binom = 1.0;
        for (j, d) in out.iter_mut().enumerate().take(i + 1) {
            *d += c * binom * h.powi((i - j) as i32);
            binom = binom * (i - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub f: SmoothFn,
}

/// A 2π-periodic function assembled from smooth segments.
///
/// Breakpoints are declared by the caller and checked: the function is
/// `C^{k−1}` everywhere and its `k`-th derivative jumps exactly at the declared
/// breakpoints. A function with `smoothness_order == None` is smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePeriodicFunction {
    segments: Vec<Segment>,
    breakpoints: Vec<f64>,
    smoothness_order: Option<u32>,
}

impl PiecewisePeriodicFunction {
    pub fn new(segments: Vec<Segment>, breakpoints: Vec<f64>, smoothness_order: Option<u32>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidFunction("no segments".into()));
        }
        if smoothness_order == Some(0) {
            return Err(Error::InvalidFunction(
                "order k = 0 (a discontinuous function) is not supported; k must be at least 1".into(),
            ));
        }
        if let Some(k) = smoothness_order {
            if k > MAX_DERIVATIVE_ORDER {
                return Err(Error::UnsupportedOrder { order: k, max: MAX_DERIVATIVE_ORDER });
            }
        }
        if segments[0].start.abs() > LOCATION_TOL || (segments.last().unwrap().end - TWO_PI).abs() > LOCATION_TOL {
            return Err(Error::InvalidFunction("segments must tile [0, 2π)".into()));
        }
        for w in segments.windows(2) {
            if (w[0].end - w[1].start).abs() > LOCATION_TOL {
                return Err(Error::InvalidFunction(format!("gap or overlap at x = {}", w[0].end)));
            }
        }
        if segments.iter().any(|s| s.end <= s.start) {
            return Err(Error::InvalidFunction("empty segment".into()));
        }
        let mut bps: Vec<f64> = breakpoints.iter().map(|&b| crate::numerics::wrap_angle(b)).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() < LOCATION_TOL);
        if smoothness_order.is_none() && !bps.is_empty() {
            return Err(Error::InvalidFunction("a smooth function cannot declare breakpoints".into()));
        }
        if smoothness_order.is_some() && bps.is_empty() {
            return Err(Error::InvalidFunction("a non-smooth function needs at least one breakpoint".into()));
        }
        let f = Self { segments, breakpoints: bps, smoothness_order };
        f.validate()?;
        Ok(f)
    }

    /// A single smooth piece covering the whole circle.
    pub fn smooth(f: SmoothFn) -> Result<Self> {
        Self::new(vec![Segment { start: 0.0, end: TWO_PI, f }], Vec::new(), None)
    }

    pub fn zero() -> Self {
        Self {
            segments: vec![Segment { start: 0.0, end: TWO_PI, f: SmoothFn::zero() }],
            breakpoints: Vec::new(),
            smoothness_order: None,
        }
    }

    fn boundaries(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.start).collect()
    }

    fn validate(&self) -> Result<()> {
        let check_orders = self.smoothness_order.unwrap_or(4);
        for b in self.boundaries() {
            let declared = self.is_breakpoint(b);
            for l in 0..=check_orders {
                let (left, right) = self.one_sided(b, l);
                let scale = left.abs().max(right.abs()).max(1.0);
                let jump = (right - left).abs();
                let must_vanish = l < check_orders || !declared;
                if must_vanish && jump > CONTINUITY_TOL * scale {
                    return Err(Error::InvalidFunction(format!(
                        "derivative of order {l} jumps by {:e} at x = {b}",
                        right - left
                    )));
                }
                if !must_vanish && self.smoothness_order.is_some() && jump <= CONTINUITY_TOL * scale {
                    return Err(Error::InvalidFunction(format!(
                        "declared breakpoint x = {b} has no jump in derivative order {l}"
                    )));
                }
            }
        }
        for &b in &self.breakpoints {
            if !self.boundaries().iter().any(|&s| (s - b).abs() < LOCATION_TOL) {
                return Err(Error::InvalidFunction(format!("breakpoint {b} is not a segment boundary")));
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn smoothness_order(&self) -> Option<u32> {
        self.smoothness_order
    }

    pub fn is_smooth(&self) -> bool {
        self.smoothness_order.is_none()
    }

    pub fn is_breakpoint(&self, x: f64) -> bool {
        let x = crate::numerics::wrap_angle(x);
        self.breakpoints
            .iter()
            .any(|&b| (b - x).abs() < LOCATION_TOL || (TWO_PI - (b - x).abs()) < LOCATION_TOL)
    }

    fn segment_index(&self, x: f64) -> usize {
        let x = crate::numerics::wrap_angle(x);
        match self.segments.binary_search_by(|s| {
            if x < s.start {
                std::cmp::Ordering::Greater
            } else if x >= s.end {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => i,
            Err(i) => i.min(self.segments.len() - 1),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// Derivative of the given order; at a boundary the right-hand segment is used.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let seg = &self.segments[self.segment_index(x)];
        // evaluate in the segment's own coordinates so polynomial origins stay meaningful
        let xw = crate::numerics::wrap_angle(x);
        seg.f.derivative(xw, order)
    }

    /// Left and right limits of the derivative of `order` at a segment boundary.
    fn one_sided(&self, b: f64, order: u32) -> (f64, f64) {
        let b = crate::numerics::wrap_angle(b);
        let right_idx = self
            .segments
            .iter()
            .position(|s| (s.start - b).abs() < LOCATION_TOL)
            .unwrap_or_else(|| self.segment_index(b));
        let right = self.segments[right_idx].f.derivative(self.segments[right_idx].start.max(b), order);
        let left = if right_idx == 0 {
            let last = self.segments.last().unwrap();
            last.f.derivative(last.end, order)
        } else {
            let s = &self.segments[right_idx - 1];
            s.f.derivative(s.end, order)
        };
        (left, right)
    }

    /// Left and right limits of the derivative of `order` at any point.
    pub fn one_sided_derivatives(&self, x: f64, order: u32) -> (f64, f64) {
        let xw = crate::numerics::wrap_angle(x);
        if self.boundaries().iter().any(|&s| (s - xw).abs() < LOCATION_TOL) || (TWO_PI - xw) < LOCATION_TOL {
            self.one_sided(xw, order)
        } else {
            let v = self.derivative(xw, order);
            (v, v)
        }
    }

    /// `∧^k f(x*)`: right limit minus left limit of the `k`-th derivative;
    /// zero away from declared breakpoints.
    pub fn jump_at(&self, x: f64, order: u32) -> Result<f64> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::UnsupportedOrder { order, max: MAX_DERIVATIVE_ORDER });
        }
        if !self.is_breakpoint(x) {
            return Ok(0.0);
        }
        let (l, r) = self.one_sided(x, order);
        Ok(r - l)
    }

    pub fn scaled(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero();
        }
        Self {
            segments: self
                .segments
                .iter()
                .map(|seg| Segment { start: seg.start, end: seg.end, f: seg.f.scaled(s) })
                .collect(),
            breakpoints: self.breakpoints.clone(),
            smoothness_order: self.smoothness_order,
        }
    }

    /// Pointwise sum. Segment boundaries are merged; breakpoints and the
    /// smoothness order are re-derived from the operands.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut cuts: Vec<f64> = self.boundaries();
        cuts.extend(other.boundaries());
        cuts.push(TWO_PI);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < LOCATION_TOL);
        let mut segments = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let a = &self.segments[self.segment_index(mid)].f;
            let b = &other.segments[other.segment_index(mid)].f;
            segments.push(Segment { start: w[0], end: w[1], f: a.add(b) });
        }
        let order = match (self.smoothness_order, other.smoothness_order) {
            (None, None) => None,
            (Some(k), None) | (None, Some(k)) => Some(k),
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        let mut bps = Vec::new();
        if let Some(k) = order {
            for &b in self.breakpoints.iter().chain(other.breakpoints.iter()) {
                let j = self.jump_at(b, k)? + other.jump_at(b, k)?;
                if j.abs() > CONTINUITY_TOL {
                    bps.push(b);
                }
            }
        }
        if order.is_some() && bps.is_empty() {
            return Self::new(segments, Vec::new(), None);
        }
        Self::new(segments, bps, order)
    }

    /// `(1/2π) ∫_0^{2π} f(x) e^{-imx} dx` integrated segment by segment in closed form.
    pub fn fourier_coefficient(&self, m: i64) -> Complex64 {
        let total: Complex64 = self.segments.iter().map(|s| s.f.integral_exp(s.start, s.end, m as f64)).sum();
        total / TWO_PI
    }

    pub fn max_value(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for seg in &self.segments {
            let n = 256;
            for i in 0..=n {
                let x = seg.start + (seg.end - seg.start) * i as f64 / n as f64;
                best = best.max(seg.f.value(x));
            }
        }
        best
    }

    pub fn min_value(&self) -> f64 {
        -self.scaled(-1.0).max_value()
    }

    /// True when `f(−x) = f(x)` on a sample grid.
    pub fn is_even(&self) -> bool {
        (0..200).all(|i| {
            let x = TWO_PI * (i as f64 + 0.37) / 200.0;
            (self.value(x) - self.value(-x)).abs() <= 1e-13 * self.value(x).abs().max(1.0)
        })
    }
}
