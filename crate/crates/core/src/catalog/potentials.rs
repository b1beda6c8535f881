use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::Result;
use crate::model::{Harmonic, PiecewisePeriodicFunction, Segment, SmoothFn};
use crate::numerics::TWO_PI;

fn cos1() -> SmoothFn {
    SmoothFn::trig(0.0, vec![Harmonic::cosine(1.0, 1.0)])
}

fn sin1() -> SmoothFn {
    SmoothFn::trig(0.0, vec![Harmonic::sine(1.0, 1.0)])
}

pub fn cos_squared() -> Result<PiecewisePeriodicFunction> {
    PiecewisePeriodicFunction::smooth(SmoothFn::cos_power(2))
}

pub fn abs_cos() -> Result<PiecewisePeriodicFunction> {
    let c = cos1();
    PiecewisePeriodicFunction::new(
        vec![
            Segment { start: 0.0, end: FRAC_PI_2, f: c.clone() },
            Segment { start: FRAC_PI_2, end: 1.5 * PI, f: c.scaled(-1.0) },
            Segment { start: 1.5 * PI, end: TWO_PI, f: c },
        ],
        vec![FRAC_PI_2, 1.5 * PI],
        Some(1),
    )
}

/// `max(cos x, 0)^k`; the `k`-th derivative jumps by `±k!`.
pub fn clipped_cos_power(k: u32) -> Result<PiecewisePeriodicFunction> {
    let c = SmoothFn::cos_power(k);
    PiecewisePeriodicFunction::new(
        vec![
            Segment { start: 0.0, end: FRAC_PI_2, f: c.clone() },
            Segment { start: FRAC_PI_2, end: 1.5 * PI, f: SmoothFn::zero() },
            Segment { start: 1.5 * PI, end: TWO_PI, f: c },
        ],
        vec![FRAC_PI_2, 1.5 * PI],
        Some(k),
    )
}

/// `1 − (x/π)²` on `|x| ≤ π`, continued periodically.
pub fn inverted_parabola() -> Result<PiecewisePeriodicFunction> {
    let q = -1.0 / (PI * PI);
    PiecewisePeriodicFunction::new(
        vec![
            Segment { start: 0.0, end: PI, f: SmoothFn::polynomial(0.0, vec![1.0, 0.0, q]) },
            Segment { start: PI, end: TWO_PI, f: SmoothFn::polynomial(TWO_PI, vec![1.0, 0.0, q]) },
        ],
        vec![PI],
        Some(1),
    )
}

/// `cos x + λ|sin x|`.
pub fn cos_plus_abs_sin(lambda: f64) -> Result<PiecewisePeriodicFunction> {
    if lambda == 0.0 {
        return PiecewisePeriodicFunction::smooth(cos1());
    }
    let s = sin1().scaled(lambda);
    PiecewisePeriodicFunction::new(
        vec![
            Segment { start: 0.0, end: PI, f: cos1().add(&s) },
            Segment { start: PI, end: TWO_PI, f: cos1().add(&s.scaled(-1.0)) },
        ],
        vec![0.0, PI],
        Some(1),
    )
}
