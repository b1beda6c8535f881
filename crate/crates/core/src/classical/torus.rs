use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CircleSystem;
use crate::numerics::roots::expand_bracket;
use crate::numerics::{bisect, integrate_turning, QuadOptions, TWO_PI};

/// Topological class of an energy shell component, enumerated per system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TorusClass {
    /// One sheet over the whole circle with momentum strictly between `join`
    /// and `limit` (`±∞` allowed).
    Rotational { join: f64, limit: f64 },
    /// Closed curve around `x_center`: one sheet in `(join, upper_limit)` and
    /// one in `(lower_limit, join)`, meeting where `H(x, join) = ε`.
    Pocket { x_center: f64, join: f64, upper_limit: f64, lower_limit: f64 },
}

impl TorusClass {
    pub fn label(&self) -> String {
        match self {
            TorusClass::Rotational { join, limit } => format!("rotational({join}, {limit})"),
            TorusClass::Pocket { x_center, join, .. } => format!("pocket(x={x_center:.6}, p={join})"),
        }
    }
}

/// Momentum graph `p = P(x)` of one branch of the torus over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub lo: f64,
    pub hi: f64,
    pub join: f64,
    pub limit: f64,
    /// Sign of `ẋ` on this sheet.
    pub direction: f64,
}

/// A point on a torus: sheet index plus position in that sheet's frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub sheet: usize,
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausticKind {
    /// `ẋ` changes sign (turning point in `x`).
    X,
    /// `ṗ` changes sign.
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caustic {
    pub kind: CausticKind,
    /// Walk parameter along the direction of motion.
    pub tau: f64,
}

pub(crate) fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_panels: 20_000 }
}

#[derive(Debug, Clone)]
pub struct Torus<'a> {
    pub system: &'a CircleSystem,
    pub energy: f64,
    pub class: TorusClass,
    pub sheets: Vec<Sheet>,
}

const EDGE_SCAN: usize = 400;

impl<'a> Torus<'a> {
    pub fn new(system: &'a CircleSystem, energy: f64, class: TorusClass) -> Result<Self> {
        let sheets = match class {
            TorusClass::Rotational { join, limit } => {
                let g = |x: f64| system.hamiltonian(x, join) - energy;
                let mut worst = f64::NEG_INFINITY;
                for i in 0..=EDGE_SCAN * 2 {
                    worst = worst.max(g(TWO_PI * i as f64 / (EDGE_SCAN * 2) as f64));
                }
                for &b in system.potential.breakpoints() {
                    worst = worst.max(g(b));
                }
                let tol = 1e-12 * energy.abs().max(1.0);
                if worst > tol {
                    return Err(Error::NoTorus { energy, class: class.label() });
                }
                if worst > -tol {
                    return Err(Error::SingularTorus { energy, reason: "momentum reaches the join line".into() });
                }
                let probe = Self::probe_direction(system, 0.0, join, limit, energy)?;
                vec![Sheet { lo: 0.0, hi: TWO_PI, join, limit, direction: probe }]
            }
            TorusClass::Pocket { x_center, join, upper_limit, lower_limit } => {
                let g = |x: f64| system.hamiltonian(x, join) - energy;
                if g(x_center) >= 0.0 {
                    return Err(Error::NoTorus { energy, class: class.label() });
                }
                let edge = |dir: f64| -> Result<f64> {
                    let h = std::f64::consts::PI / EDGE_SCAN as f64;
                    let mut a = x_center;
                    for i in 1..=EDGE_SCAN {
                        let b = x_center + dir * h * i as f64;
                        if g(b) >= 0.0 {
                            return bisect(g, a, b);
                        }
                        a = b;
                    }
                    Err(Error::SingularTorus { energy, reason: "pocket reaches its periodic image".into() })
                };
                let lo = edge(-1.0)?;
                let hi = edge(1.0)?;
                let xm = 0.5 * (lo + hi);
                let du = Self::probe_direction(system, xm, join, upper_limit, energy)?;
                let dl = Self::probe_direction(system, xm, join, lower_limit, energy)?;
                if du == dl {
                    return Err(Error::SingularTorus { energy, reason: "both sheets move the same way".into() });
                }
                let upper = Sheet { lo, hi, join, limit: upper_limit, direction: du };
                let lower = Sheet { lo, hi, join, limit: lower_limit, direction: dl };
                // forward sheet first
                if du > 0.0 {
                    vec![upper, lower]
                } else {
                    vec![lower, upper]
                }
            }
        };
        Ok(Self { system, energy, class, sheets })
    }

    fn probe_direction(system: &CircleSystem, x: f64, join: f64, limit: f64, energy: f64) -> Result<f64> {
        let p = solve_momentum(system, energy, x, join, limit)?;
        let v = system.dh_dp(x, p);
        if v == 0.0 {
            return Err(Error::SingularTorus { energy, reason: format!("zero velocity at x = {x}") });
        }
        Ok(v.signum())
    }

    pub fn is_pocket(&self) -> bool {
        matches!(self.class, TorusClass::Pocket { .. })
    }

    /// `P(x)` on a sheet (`x` in the sheet frame).
    pub fn sheet_momentum(&self, sheet: usize, x: f64) -> Result<f64> {
        let s = &self.sheets[sheet];
        // rounding at the pocket edges can leave `H(x, join)` a hair above ε
        if self.is_pocket() && (x <= s.lo || x >= s.hi || self.system.hamiltonian(x, s.join) >= self.energy) {
            return Ok(s.join);
        }
        solve_momentum(self.system, self.energy, x, s.join, s.limit)
    }

    /// Length of one circuit in the walk parameter.
    pub fn circuit(&self) -> f64 {
        match self.class {
            TorusClass::Rotational { .. } => TWO_PI,
            TorusClass::Pocket { .. } => 2.0 * (self.sheets[0].hi - self.sheets[0].lo),
        }
    }

    /// Walk parameter of a point: `x` (or `2π − x`) on a rotational torus,
    /// `x − lo` forward then `L + (hi − x)` back on a pocket.
    pub fn tau(&self, pt: &TorusPoint) -> f64 {
        let s = &self.sheets[pt.sheet];
        match self.class {
            TorusClass::Rotational { .. } => {
                let x = pt.x.rem_euclid(TWO_PI);
                if s.direction > 0.0 {
                    x
                } else {
                    (TWO_PI - x).rem_euclid(TWO_PI)
                }
            }
            TorusClass::Pocket { .. } => {
                let len = s.hi - s.lo;
                let t = if pt.sheet == 0 { (pt.x - s.lo).clamp(0.0, len) } else { len + (s.hi - pt.x).clamp(0.0, len) };
                t.rem_euclid(2.0 * len)
            }
        }
    }

    /// Sheet and `x` at walk parameter `tau ∈ [0, circuit]`.
    pub fn at_tau(&self, tau: f64) -> (usize, f64) {
        let s = &self.sheets[0];
        match self.class {
            TorusClass::Rotational { .. } => (0, if s.direction > 0.0 { tau } else { TWO_PI - tau }),
            TorusClass::Pocket { .. } => {
                let len = s.hi - s.lo;
                if tau <= len {
                    (0, s.lo + tau)
                } else {
                    (1, s.hi - (tau - len))
                }
            }
        }
    }

    /// Interior kinks of `H` in `x` that fall inside `(a, b)` on this torus.
    fn kinks_between(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for &k in self.system.potential.breakpoints() {
            let mut m = ((a - k) / TWO_PI).floor() as i64;
            loop {
                let x = k + TWO_PI * m as f64;
                if x >= b {
                    break;
                }
                if x > a {
                    out.push(x);
                }
                m += 1;
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// `∫_a^b f(x, P(x)) dx` on one sheet, `a < b`, with pocket edges handled
    /// as square-root turning points.
    pub fn sheet_integral<F: Fn(f64, f64) -> f64>(&self, sheet: usize, a: f64, b: f64, f: F) -> Result<f64> {
        self.sheet_integral_with(sheet, a, b, f, quad_opts())
    }

    fn sheet_integral_with<F: Fn(f64, f64) -> f64>(&self, sheet: usize, a: f64, b: f64, f: F, opts: QuadOptions) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let s = self.sheets[sheet];
        let pocket = self.is_pocket();
        let edge_tol = 1e-12 * (s.hi - s.lo).max(1.0);
        let mut pts = vec![a];
        pts.extend(self.kinks_between(a, b));
        pts.push(b);
        let mut total = 0.0;
        let mut err: Option<Error> = None;
        let g = |x: f64| self.sheet_momentum(sheet, x).map_or(f64::NAN, |p| f(x, p));
        for w in pts.windows(2) {
            let sa = pocket && (w[0] - s.lo).abs() < edge_tol;
            let sb = pocket && (w[1] - s.hi).abs() < edge_tol;
            let r = integrate_turning(g, w[0], w[1], sa, sb, opts);
            match r {
                Ok(v) if v.value.is_finite() => total += v.value,
                Ok(_) => err = Some(Error::NoTorus { energy: self.energy, class: self.class.label() }),
                Err(e) => err = Some(e),
            }
        }
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// `∫ p dx` walking forward from parameter `t0` to `t1 ≥ t0` within one circuit.
    fn walk_span(&self, t0: f64, t1: f64) -> Result<f64> {
        if t1 <= t0 {
            return Ok(0.0);
        }
        let s = self.sheets[0];
        match self.class {
            TorusClass::Rotational { .. } => {
                if s.direction > 0.0 {
                    self.sheet_integral(0, t0, t1, |_, p| p)
                } else {
                    Ok(-self.sheet_integral(0, TWO_PI - t1, TWO_PI - t0, |_, p| p)?)
                }
            }
            TorusClass::Pocket { .. } => {
                let len = s.hi - s.lo;
                let mut total = 0.0;
                if t0 < len {
                    let b = t1.min(len);
                    total += self.sheet_integral(0, s.lo + t0, s.lo + b, |_, p| p)?;
                }
                if t1 > len {
                    let a = t0.max(len);
                    total -= self.sheet_integral(1, s.hi - (t1 - len), s.hi - (a - len), |_, p| p)?;
                }
                Ok(total)
            }
        }
    }

    /// `∫ p dx` along the direction of motion from `a` to `b`; zero when they coincide.
    pub fn walk(&self, a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
        let (ta, tb) = (self.tau(a), self.tau(b));
        let c = self.circuit();
        if (ta - tb).abs() < 1e-13 * c {
            return Ok(0.0);
        }
        if tb > ta {
            self.walk_span(ta, tb)
        } else {
            Ok(self.walk_span(ta, c)? + self.walk_span(0.0, tb)?)
        }
    }

    /// Caustics strictly between walk parameters `ta` and `tb` (forward, wrapping).
    pub fn caustics_between(&self, ta: f64, tb: f64, kinds: &[CausticKind]) -> Result<usize> {
        let c = self.circuit();
        if (ta - tb).abs() < 1e-13 * c {
            return Ok(0);
        }
        let tol = 1e-9 * c;
        let inside = |t: f64| {
            if tb > ta {
                t > ta + tol && t < tb - tol
            } else {
                t > ta + tol || t < tb - tol
            }
        };
        Ok(self.caustics()?.iter().filter(|k| kinds.contains(&k.kind) && inside(k.tau)).count())
    }

    /// All caustics of one circuit.
    pub fn caustics(&self) -> Result<Vec<Caustic>> {
        let mut out = Vec::new();
        if self.is_pocket() {
            let len = self.sheets[0].hi - self.sheets[0].lo;
            out.push(Caustic { kind: CausticKind::X, tau: 0.0 });
            out.push(Caustic { kind: CausticKind::X, tau: len });
        }
        for (i, s) in self.sheets.iter().enumerate() {
            for x in self.p_turning_points(i)? {
                let tau = self.tau(&TorusPoint { sheet: i, x, p: s.join });
                out.push(Caustic { kind: CausticKind::P, tau });
            }
        }
        Ok(out)
    }

    /// Positions on a sheet where `ṗ = −∂H/∂x` changes sign, including kinks.
    fn p_turning_points(&self, sheet: usize) -> Result<Vec<f64>> {
        let s = self.sheets[sheet];
        let span = s.hi - s.lo;
        let margin = 1e-9 * span;
        let (a, b) = (s.lo + margin, s.hi - margin);
        let kinks = self.kinks_between(s.lo, s.hi);
        let mut cuts = vec![a];
        cuts.extend(kinks.iter().copied());
        cuts.push(b);
        let force = |x: f64| self.sheet_momentum(sheet, x).map_or(f64::NAN, |p| self.system.dh_dx(x, p));
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let n = ((hi - lo) / span * 400.0).ceil().max(8.0) as usize;
            let pad = 1e-10 * span;
            let mut x0 = lo + pad;
            let mut f0 = force(x0);
            for i in 1..=n {
                let x1 = if i == n { hi - pad } else { lo + (hi - lo) * i as f64 / n as f64 };
                let f1 = force(x1);
                if f0 != 0.0 && f1 != 0.0 && f0.signum() != f1.signum() {
                    out.push(bisect(force, x0, x1)?);
                }
                x0 = x1;
                f0 = f1;
            }
        }
        for &k in &kinks {
            let p = self.sheet_momentum(sheet, k)?;
            let (l, r) = self.system.dh_dx_sides(k.rem_euclid(TWO_PI), p);
            if l != 0.0 && r != 0.0 && l.signum() != r.signum() {
                out.push(k);
            }
        }
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// `∮ p dx` along the direction of motion.
    pub fn action(&self) -> Result<f64> {
        match self.class {
            TorusClass::Rotational { .. } => {
                Ok(self.sheets[0].direction * self.sheet_integral(0, 0.0, TWO_PI, |_, p| p)?)
            }
            TorusClass::Pocket { .. } => {
                let s = self.sheets[0];
                let f = self.sheet_integral(0, s.lo, s.hi, |_, p| p)?;
                let b = self.sheet_integral(1, s.lo, s.hi, |_, p| p)?;
                Ok(f - b)
            }
        }
    }

    /// `∮ dx/|ẋ|`.
    pub fn period(&self) -> Result<f64> {
        let sys = self.system;
        let mut t = 0.0;
        for i in 0..self.sheets.len() {
            let s = self.sheets[i];
            // 1/|ẋ| is noisy within rounding distance of a pocket edge, so the
            // period is held to a looser tolerance than the action
            let f = |x: f64, p: f64| {
                let v = sys.dh_dp(x, p).abs();
                if v == 0.0 {
                    0.0
                } else {
                    1.0 / v
                }
            };
            t += self.sheet_integral_with(i, s.lo, s.hi, f, QuadOptions { rel_tol: 1e-10, ..quad_opts() })?;
        }
        if !t.is_finite() {
            return Err(Error::SingularTorus { energy: self.energy, reason: "infinite period".into() });
        }
        Ok(t)
    }

    /// `s(x) = ∫_0^x P dx'` on a rotational torus.
    pub fn phase_integral(&self, x: f64) -> Result<f64> {
        if self.is_pocket() {
            return Err(Error::Projection { x });
        }
        if !(0.0..=TWO_PI).contains(&x) {
            return Err(Error::Projection { x });
        }
        self.sheet_integral(0, 0.0, x, |_, p| p)
    }

    /// Sheets of this torus covering `x` (any `2π` image), with the image used.
    pub fn sheets_at(&self, x: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, s) in self.sheets.iter().enumerate() {
            let m = ((s.lo - x) / TWO_PI).ceil();
            let xi = x + TWO_PI * m;
            if !self.is_pocket() {
                out.push((i, x.rem_euclid(TWO_PI)));
            } else if xi >= s.lo && xi <= s.hi {
                out.push((i, xi));
            }
        }
        out
    }
}

/// Root of `H(x, p) = ε` with `p` strictly between `join` and `limit`.
pub fn solve_momentum(system: &CircleSystem, energy: f64, x: f64, join: f64, limit: f64) -> Result<f64> {
    let g = |p: f64| system.hamiltonian(x, p) - energy;
    let far = if limit.is_finite() {
        limit
    } else {
        expand_bracket(g, join, limit.signum(), 0.5)?
    };
    bisect(g, join, far).map_err(|_| Error::NoTorus { energy, class: format!("no momentum at x = {x}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KineticForm, PiecewisePeriodicFunction};
    use std::f64::consts::PI;

    fn free(kin: KineticForm) -> CircleSystem {
        CircleSystem::separable(kin, PiecewisePeriodicFunction::zero(), 0.1).unwrap()
    }

    #[test]
    fn free_actions_and_periods() {
        let s = free(KineticForm::abs(0.0));
        let t = Torus::new(&s, 2.0, TorusClass::Rotational { join: 0.0, limit: f64::INFINITY }).unwrap();
        assert!((t.action().unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((t.period().unwrap() - 2.0 * PI).abs() < 1e-12);
        let s = free(KineticForm::quadratic());
        let t = Torus::new(&s, 2.0, TorusClass::Rotational { join: 0.0, limit: f64::INFINITY }).unwrap();
        assert!((t.action().unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((t.period().unwrap() - PI).abs() < 1e-12);
        assert!((t.phase_integral(1.0).unwrap() - 2.0).abs() < 1e-13);
        let back = Torus::new(&s, 2.0, TorusClass::Rotational { join: 0.0, limit: f64::NEG_INFINITY }).unwrap();
        assert!((back.action().unwrap() - 4.0 * PI).abs() < 1e-12);
        assert_eq!(back.sheets[0].direction, -1.0);
    }

    #[test]
    fn harmonic_like_pocket() {
        // p²/2 + (1 − cos x): small pockets approach a harmonic oscillator
        let v = PiecewisePeriodicFunction::smooth(crate::model::SmoothFn::trig(
            1.0,
            vec![crate::model::Harmonic::cosine(1.0, -1.0)],
        ))
        .unwrap();
        let s = CircleSystem::separable(KineticForm::quadratic(), v, 0.1).unwrap();
        let c = TorusClass::Pocket { x_center: 0.0, join: 0.0, upper_limit: f64::INFINITY, lower_limit: f64::NEG_INFINITY };
        let e = 1e-4;
        let t = Torus::new(&s, e, c).unwrap();
        // pendulum: T = 2π(1 + ε/8), S = 2πε(1 + ε/16) to this order
        assert!((t.action().unwrap() - 2.0 * PI * e * (1.0 + e / 16.0)).abs() < 1e-11);
        assert!((t.period().unwrap() - 2.0 * PI).abs() < 1e-4);
        assert_eq!(t.caustics().unwrap().iter().filter(|k| k.kind == CausticKind::X).count(), 2);
        assert_eq!(t.caustics().unwrap().iter().filter(|k| k.kind == CausticKind::P).count(), 2);
        // a full loop in two halves reproduces the action
        let a = TorusPoint { sheet: 0, x: 0.0, p: 0.0 };
        let b = TorusPoint { sheet: 1, x: 0.0, p: 0.0 };
        let w = t.walk(&a, &b).unwrap() + t.walk(&b, &a).unwrap();
        assert!((w - t.action().unwrap()).abs() < 1e-12);
        assert_eq!(t.walk(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn missing_pocket_is_reported() {
        let s = free(KineticForm::quadratic());
        let c = TorusClass::Pocket { x_center: 0.0, join: 0.0, upper_limit: f64::INFINITY, lower_limit: f64::NEG_INFINITY };
        assert!(Torus::new(&s, 1.0, c).is_err());
    }
}
