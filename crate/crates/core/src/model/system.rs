use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::PiecewisePeriodicFunction;
use super::kinetic::KineticForm;
use super::momentum::MomentumFunction;
use crate::error::{Error, Result};

/// `T_q(p) e^{iqx}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedTerm {
    pub q: i32,
    pub coeff: MomentumFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// A line `x = x*` on which the potential is non-smooth.
    X,
    /// A line `p = p*` on which the momentum dependence is non-smooth.
    P,
}

/// Size of a derivative jump: a constant, or a function of `x` given by its
/// harmonics `Re Σ c_q e^{iqx}` (p-lines crossing mixed terms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Jump {
    Constant(f64),
    Harmonics(Vec<(i32, Complex64)>),
}

impl Jump {
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            Jump::Constant(c) => *c,
            Jump::Harmonics(h) => h.iter().map(|(q, c)| (c * Complex64::from_polar(1.0, *q as f64 * x)).re).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonSmoothLocus {
    pub axis: Axis,
    pub location: f64,
    pub order: u32,
    pub jump: Jump,
}

/// `H = E_k(p) + V(x) + Σ_q T_q(p) e^{iqx}` on the circle, quantized on the
/// momentum grid `p_r = rħ + p₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSystem {
    pub kinetic: KineticForm,
    pub potential: PiecewisePeriodicFunction,
    pub mixed_terms: Vec<MixedTerm>,
    pub hbar: f64,
    pub p_offset: f64,
}

const JUMP_TOL: f64 = 1e-12;
const MAX_LOCUS_ORDER: u32 = 6;

impl CircleSystem {
    pub fn new(
        kinetic: KineticForm,
        potential: PiecewisePeriodicFunction,
        mixed_terms: Vec<MixedTerm>,
        hbar: f64,
        p_offset: f64,
    ) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::OutOfRange { name: "hbar".into(), value: hbar, allowed: "> 0".into() });
        }
        let s = Self { kinetic, potential, mixed_terms, hbar, p_offset };
        s.check_hermitian()?;
        Ok(s)
    }

    pub fn separable(kinetic: KineticForm, potential: PiecewisePeriodicFunction, hbar: f64) -> Result<Self> {
        Self::new(kinetic, potential, Vec::new(), hbar, 0.0)
    }

    fn check_hermitian(&self) -> Result<()> {
        for t in &self.mixed_terms {
            let partner: Vec<&MixedTerm> = self.mixed_terms.iter().filter(|o| o.q == -t.q).collect();
            if partner.is_empty() {
                return Err(Error::NonHermitian(format!("harmonic q = {} has no q = {} partner", t.q, -t.q)));
            }
            for i in 0..40 {
                let p = t.coeff.center + (i as f64 - 20.0) * 0.0731 * t.coeff.radius_sq.sqrt().max(1.0) / 20.0;
                let a = t.coeff.value(p);
                let b: Complex64 = partner.iter().map(|o| o.coeff.value(p)).sum::<Complex64>().conj();
                let own: Complex64 = self.mixed_terms.iter().filter(|o| o.q == t.q).map(|o| o.coeff.value(p)).sum();
                if (own - b).norm() > 1e-12 * a.norm().max(1.0) {
                    return Err(Error::NonHermitian(format!("T_{{-{}}} is not the conjugate of T_{} at p = {p}", t.q, t.q)));
                }
            }
        }
        Ok(())
    }

    pub fn hamiltonian(&self, x: f64, p: f64) -> f64 {
        self.kinetic.value(p) + self.potential.value(x) + self.mixed_value(x, p, 0)
    }

    fn mixed_value(&self, x: f64, p: f64, p_order: u32) -> f64 {
        self.mixed_terms
            .iter()
            .map(|t| (t.coeff.derivative(p, p_order) * Complex64::from_polar(1.0, t.q as f64 * x)).re)
            .sum()
    }

    /// `∂H/∂p = ẋ`.
    pub fn dh_dp(&self, x: f64, p: f64) -> f64 {
        self.kinetic.velocity(p) + self.mixed_value(x, p, 1)
    }

    /// `∂H/∂x = −ṗ`.
    pub fn dh_dx(&self, x: f64, p: f64) -> f64 {
        let mixed: f64 = self
            .mixed_terms
            .iter()
            .map(|t| (t.coeff.value(p) * Complex64::new(0.0, t.q as f64) * Complex64::from_polar(1.0, t.q as f64 * x)).re)
            .sum();
        self.potential.derivative(x, 1) + mixed
    }

    /// One-sided `∂H/∂x` at `x`, needed at kinks of the potential.
    pub fn dh_dx_sides(&self, x: f64, p: f64) -> (f64, f64) {
        let (l, r) = self.potential.one_sided_derivatives(x, 1);
        let mixed = self.dh_dx(x, p) - self.potential.derivative(x, 1);
        (l + mixed, r + mixed)
    }

    pub fn has_mixed_terms(&self) -> bool {
        !self.mixed_terms.is_empty()
    }

    /// Non-smoothness lines `x = x*` from the potential.
    pub fn x_loci(&self) -> Result<Vec<NonSmoothLocus>> {
        let Some(k) = self.potential.smoothness_order() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for &b in self.potential.breakpoints() {
            out.push(NonSmoothLocus { axis: Axis::X, location: b, order: k, jump: Jump::Constant(self.potential.jump_at(b, k)?) });
        }
        Ok(out)
    }

    /// Non-smoothness lines `p = p*` from kinks of the kinetic energy or of
    /// region-restricted mixed terms.
    pub fn p_loci(&self) -> Vec<NonSmoothLocus> {
        let mut candidates: Vec<f64> = self.kinetic.breakpoints().to_vec();
        for t in &self.mixed_terms {
            if t.coeff.has_region_split() {
                candidates.push(t.coeff.center);
            }
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut out = Vec::new();
        for p in candidates {
            for l in 1..=MAX_LOCUS_ORDER {
                let mut harmonics: Vec<(i32, Complex64)> = Vec::new();
                let kin = self.kinetic.jump(p, l);
                if kin.abs() > JUMP_TOL {
                    harmonics.push((0, Complex64::new(kin, 0.0)));
                }
                for t in &self.mixed_terms {
                    let j = t.coeff.derivative_side(p, l, true) - t.coeff.derivative_side(p, l, false);
                    if j.norm() > JUMP_TOL {
                        match harmonics.iter_mut().find(|(q, _)| *q == t.q) {
                            Some(h) => h.1 += j,
                            None => harmonics.push((t.q, j)),
                        }
                    }
                }
                harmonics.retain(|(_, c)| c.norm() > JUMP_TOL);
                if harmonics.is_empty() {
                    continue;
                }
                let jump = if harmonics.len() == 1 && harmonics[0].0 == 0 {
                    Jump::Constant(harmonics[0].1.re)
                } else {
                    Jump::Harmonics(harmonics)
                };
                out.push(NonSmoothLocus { axis: Axis::P, location: p, order: l, jump });
                break;
            }
        }
        out
    }

    pub fn loci(&self) -> Result<Vec<NonSmoothLocus>> {
        let mut v = self.x_loci()?;
        v.extend(self.p_loci());
        Ok(v)
    }

    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(self.kinetic.clone(), self.potential.clone(), self.mixed_terms.clone(), hbar, self.p_offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::function::{Harmonic, Segment, SmoothFn};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn h2() -> CircleSystem {
        let c = SmoothFn::trig(0.0, vec![Harmonic::cosine(1.0, 1.0)]);
        let v = PiecewisePeriodicFunction::new(
            vec![
                Segment { start: 0.0, end: FRAC_PI_2, f: c.clone() },
                Segment { start: FRAC_PI_2, end: 1.5 * PI, f: c.scaled(-1.0) },
                Segment { start: 1.5 * PI, end: 2.0 * PI, f: c },
            ],
            vec![FRAC_PI_2, 1.5 * PI],
            Some(1),
        )
        .unwrap();
        CircleSystem::separable(KineticForm::quadratic(), v, 0.05).unwrap()
    }

    #[test]
    fn loci_of_h2_and_h4_like_system() {
        let s = h2();
        let xl = s.x_loci().unwrap();
        assert_eq!(xl.len(), 2);
        assert!(xl.iter().all(|l| l.order == 1 && l.jump == Jump::Constant(2.0)));
        assert!(s.p_loci().is_empty());
        let h4 = CircleSystem::separable(KineticForm::abs(0.0), s.potential.clone(), 0.05).unwrap();
        let pl = h4.p_loci();
        assert_eq!(pl.len(), 1);
        assert_eq!(pl[0].jump, Jump::Constant(2.0));
    }

    #[test]
    fn velocities() {
        let s = h2();
        assert_eq!(s.dh_dp(0.3, 2.0), 2.0);
        assert!((s.dh_dx(0.3, 2.0) + 0.3f64.sin()).abs() < 1e-15);
        let (l, r) = s.dh_dx_sides(FRAC_PI_2, 1.0);
        assert!((l + 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_hbar() {
        let s = h2();
        assert!(matches!(s.with_hbar(-1.0), Err(Error::OutOfRange { .. })));
    }
}
