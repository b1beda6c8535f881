//! Bracketing root finders.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket, run until the bracket cannot shrink
/// further in double precision.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expand `hi` geometrically away from `lo` until `f` changes sign.
pub fn expand_bracket<F: Fn(f64) -> f64>(f: F, lo: f64, direction: f64, initial: f64) -> Result<f64> {
    let f0 = f(lo);
    let mut step = initial.abs().max(1e-3);
    for _ in 0..200 {
        let hi = lo + direction.signum() * step;
        let fh = f(hi);
        if fh.signum() != f0.signum() || fh == 0.0 {
            return Ok(hi);
        }
        step *= 2.0;
    }
    Err(Error::NoBracket { lo, hi: lo + direction.signum() * step })
}

/// Roots of `f` on `[a, b]` located by scanning `samples` uniform cells for
/// sign changes and refining each by bisection. Cells whose endpoints both
/// sit within `touch` of zero without a sign change are returned in
/// `touching` (candidate double roots).
pub struct ScanRoots {
    pub roots: Vec<f64>,
    pub touching: Vec<f64>,
}

pub fn scan_roots<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, samples: usize, touch: f64) -> Result<ScanRoots> {
    let n = samples.max(2);
    let h = (b - a) / n as f64;
    let mut roots = Vec::new();
    let mut touching = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=n {
        let x1 = if i == n { b } else { a + h * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            if roots.last().is_none_or(|&r: &f64| (r - x0).abs() > 1e-12) {
                roots.push(x0);
            }
        } else if f1 != 0.0 && f0.signum() != f1.signum() {
            roots.push(bisect(&f, x0, x1)?);
        } else if f0.abs() < touch && f1.abs() < touch {
            touching.push(0.5 * (x0 + x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 && roots.last().is_none_or(|&r: &f64| (r - x0).abs() > 1e-12) {
        roots.push(x0);
    }
    Ok(ScanRoots { roots, touching })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_reaches_machine_resolution() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn bisection_requires_sign_change() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn scan_finds_all_roots_of_cosine() {
        let s = scan_roots(|x: f64| x.cos(), 0.0, 2.0 * std::f64::consts::PI, 64, 1e-9).unwrap();
        assert_eq!(s.roots.len(), 2);
        assert!((s.roots[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn expands_to_sign_change() {
        let hi = expand_bracket(|p| p * p / 2.0 - 50.0, 0.0, 1.0, 1.0).unwrap();
        assert!(hi * hi / 2.0 > 50.0);
    }
}
