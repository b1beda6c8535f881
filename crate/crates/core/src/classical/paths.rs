use serde::{Deserialize, Serialize};

use super::torus::{Torus, TorusPoint};
use crate::error::{Error, Result};
use crate::model::{Axis, NonSmoothLocus};
use crate::numerics::{bisect, TWO_PI};

/// Straight segment along a non-smoothness line from `O⁺` to `O⁻`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPath {
    pub locus: NonSmoothLocus,
    pub start: TorusPoint,
    pub end: TorusPoint,
    pub order: u32,
    /// `∧^k` across the line at this path.
    pub jump: f64,
    /// `p − p′` for x-lines, `(x′ − x) mod 2π` for p-lines.
    pub length: f64,
    /// `ẋ` (x-lines) or `ṗ` (p-lines) at the two endpoints.
    pub velocities: (f64, f64),
}

impl TransitionPath {
    pub fn axis(&self) -> Axis {
        self.locus.axis
    }
}

fn edge_tol(t: &Torus) -> f64 {
    1e-9 * (t.sheets[0].hi - t.sheets[0].lo).max(1.0)
}

fn points_on_x_line(t: &Torus, x: f64) -> Result<Vec<TorusPoint>> {
    if t.is_pocket() {
        let s = t.sheets[0];
        for edge in [s.lo, s.hi] {
            let d = (x - edge).rem_euclid(TWO_PI);
            if d.min(TWO_PI - d) < edge_tol(t) {
                return Err(Error::Tangency { locus: format!("x = {x}"), at: edge });
            }
        }
    }
    t.sheets_at(x)
        .into_iter()
        .map(|(sheet, xi)| Ok(TorusPoint { sheet, x: xi, p: t.sheet_momentum(sheet, xi)? }))
        .collect()
}

fn points_on_p_line(t: &Torus, p_star: f64) -> Result<Vec<TorusPoint>> {
    let mut out = Vec::new();
    let pocket = t.is_pocket();
    if pocket && (t.sheets[0].join - p_star).abs() < 1e-12 * p_star.abs().max(1.0) {
        let s = t.sheets[0];
        out.push(TorusPoint { sheet: 0, x: s.lo, p: s.join });
        out.push(TorusPoint { sheet: 0, x: s.hi, p: s.join });
    }
    for (i, s) in t.sheets.iter().enumerate() {
        let span = s.hi - s.lo;
        let pad = if pocket { edge_tol(t) } else { 0.0 };
        let g = |x: f64| t.sheet_momentum(i, x).map_or(f64::NAN, |p| p - p_star);
        let n = 800;
        let (a, b) = (s.lo + pad, s.hi - pad);
        let mut x0 = a;
        let mut f0 = g(x0);
        let scale = p_star.abs().max(1.0);
        for k in 1..=n {
            let x1 = a + (b - a) * k as f64 / n as f64;
            let f1 = g(x1);
            if f0 == 0.0 {
                out.push(TorusPoint { sheet: i, x: x0, p: p_star });
            } else if f1 != 0.0 && f0.signum() != f1.signum() {
                let x = bisect(g, x0, x1)?;
                out.push(TorusPoint { sheet: i, x, p: p_star });
            } else if f0.abs() < 1e-9 * scale && f1.abs() < 1e-9 * scale {
                return Err(Error::Tangency { locus: format!("p = {p_star}"), at: 0.5 * (x0 + x1) });
            }
            x0 = x1;
            f0 = f1;
        }
        if !pocket && span >= TWO_PI {
            // the rotational frame closes on itself; drop a duplicate at 2π
            out.retain(|q| q.sheet != i || q.x < TWO_PI - 1e-12);
        }
    }
    Ok(out)
}

/// Every path between `plus` and `minus` along the system's non-smoothness lines.
pub fn find_transition_paths(plus: &Torus, minus: &Torus) -> Result<Vec<TransitionPath>> {
    if plus.energy != minus.energy {
        return Err(Error::EnergyMismatch { a: plus.energy, b: minus.energy });
    }
    let sys = plus.system;
    let mut out = Vec::new();
    for locus in sys.loci()? {
        match locus.axis {
            Axis::X => {
                let x = locus.location;
                let a = points_on_x_line(plus, x)?;
                let b = points_on_x_line(minus, x)?;
                for s in &a {
                    for e in &b {
                        let length = s.p - e.p;
                        if length == 0.0 {
                            return Err(Error::SingularPath(format!("zero length at x = {x}")));
                        }
                        let v = (sys.dh_dp(x, s.p), sys.dh_dp(x, e.p));
                        out.push(TransitionPath {
                            locus: locus.clone(),
                            start: *s,
                            end: *e,
                            order: locus.order,
                            jump: locus.jump.value_at(x),
                            length,
                            velocities: v,
                        });
                    }
                }
            }
            Axis::P => {
                let p = locus.location;
                let a = points_on_p_line(plus, p)?;
                let b = points_on_p_line(minus, p)?;
                for s in &a {
                    for e in &b {
                        let length = (e.x - s.x).rem_euclid(TWO_PI);
                        if length < 1e-12 {
                            return Err(Error::SingularPath(format!("zero length at p = {p}")));
                        }
                        let v = (-sys.dh_dx(s.x.rem_euclid(TWO_PI), p), -sys.dh_dx(e.x.rem_euclid(TWO_PI), p));
                        out.push(TransitionPath {
                            locus: locus.clone(),
                            start: *s,
                            end: *e,
                            order: locus.order,
                            jump: locus.jump.value_at(s.x + 0.5 * length),
                            length,
                            velocities: v,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
