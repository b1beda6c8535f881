use serde::{Deserialize, Serialize};

use super::torus::{Torus, TorusClass};
use crate::error::{Error, Result};
use crate::model::CircleSystem;
use crate::numerics::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbkLevel {
    pub n: i64,
    pub energy: f64,
}

/// `S(ε)` of a torus class.
pub fn action(system: &CircleSystem, energy: f64, class: TorusClass) -> Result<f64> {
    Torus::new(system, energy, class)?.action()
}

/// `T(ε)` of a torus class.
pub fn period(system: &CircleSystem, energy: f64, class: TorusClass) -> Result<f64> {
    Torus::new(system, energy, class)?.period()
}

/// Nearest `n` with `S = 2π(n + μ/4)ħ`.
pub fn quantum_number(action: f64, maslov: u32, hbar: f64) -> i64 {
    (action / (TWO_PI * hbar) - maslov as f64 / 4.0).round() as i64
}

/// Solutions of `S(ε_n) = 2π(n + μ/4)ħ` with `ε_n` inside `range`.
///
/// The class must exist on the closed range; `S` is assumed monotone there.
pub fn ebk_levels(system: &CircleSystem, class: TorusClass, maslov: u32, range: (f64, f64)) -> Result<Vec<EbkLevel>> {
    let h = system.hbar;
    let (e0, e1) = range;
    if !(e1 > e0) {
        return Err(Error::OutOfRange { name: "energy range".into(), value: e1, allowed: format!("> {e0}") });
    }
    let s0 = action(system, e0, class)?;
    let s1 = action(system, e1, class)?;
    let shift = maslov as f64 / 4.0;
    let (lo_s, hi_s) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
    let n_first = (lo_s / (TWO_PI * h) - shift).ceil() as i64;
    let n_last = (hi_s / (TWO_PI * h) - shift).floor() as i64;
    let mut out = Vec::new();
    for n in n_first..=n_last {
        let target = TWO_PI * (n as f64 + shift) * h;
        out.push(EbkLevel { n, energy: solve_level(system, class, target, (e0, s0), (e1, s1))? });
    }
    Ok(out)
}

/// Newton on `S(ε) − target` using `dS/dε = T`, kept inside a bisection bracket.
fn solve_level(system: &CircleSystem, class: TorusClass, target: f64, a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let (mut ea, mut fa) = (a.0, a.1 - target);
    let (mut eb, fb) = (b.0, b.1 - target);
    if fa == 0.0 {
        return Ok(ea);
    }
    if fb == 0.0 {
        return Ok(eb);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo: ea, hi: eb });
    }
    let tol = 1e-13 * target.abs().max(1.0);
    let mut e = ea + (eb - ea) * fa / (fa - fb);
    for _ in 0..200 {
        let t = Torus::new(system, e, class)?;
        let f = t.action()? - target;
        if f.abs() < tol {
            return Ok(e);
        }
        if f.signum() == fa.signum() {
            ea = e;
            fa = f;
        } else {
            eb = e;
        }
        let newton = e - f / t.period()?;
        e = if newton > ea.min(eb) && newton < ea.max(eb) { newton } else { 0.5 * (ea + eb) };
        if (eb - ea).abs() < 4.0 * f64::EPSILON * e.abs().max(1e-300) {
            return Ok(e);
        }
    }
    Ok(e)
}
