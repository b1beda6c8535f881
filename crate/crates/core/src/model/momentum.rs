//! Coefficient functions `T_q(p)` of mixed terms `T_q(p) e^{iqx}`.
//!
//! Each term is `c · u^a · R^b` with `u = p − center` and
//! `R = sqrt(radius² − u²)`, optionally restricted to `u ≥ 0` or `u < 0`.
//! This family is closed under differentiation, so every derivative is exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    All,
    /// `u ≥ 0` (the boundary belongs here).
    NonNegative,
    Negative,
}

impl Region {
    pub fn contains(&self, u: f64) -> bool {
        match self {
            Region::All => true,
            Region::NonNegative => u >= 0.0,
            Region::Negative => u < 0.0,
        }
    }

    fn contains_side(&self, u: f64, right: bool) -> bool {
        if u != 0.0 {
            return self.contains(u);
        }
        match self {
            Region::All => true,
            Region::NonNegative => right,
            Region::Negative => !right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumTerm {
    pub coeff: Complex64,
    pub u_pow: u32,
    pub r_pow: i32,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumFunction {
    pub center: f64,
    pub radius_sq: f64,
    pub terms: Vec<MomentumTerm>,
}

impl MomentumFunction {
    pub fn new(center: f64, radius_sq: f64, terms: Vec<MomentumTerm>) -> Self {
        let mut f = Self { center, radius_sq, terms };
        f.simplify();
        f
    }

    /// Merge like terms and drop zero coefficients.
    pub fn simplify(&mut self) {
        let mut out: Vec<MomentumTerm> = Vec::new();
        for t in self.terms.drain(..) {
            if let Some(o) = out.iter_mut().find(|o| o.u_pow == t.u_pow && o.r_pow == t.r_pow && o.region == t.region) {
                o.coeff += t.coeff;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.coeff.norm() > 1e-15);
        self.terms = out;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn conj(&self) -> Self {
        Self {
            center: self.center,
            radius_sq: self.radius_sq,
            terms: self.terms.iter().map(|t| MomentumTerm { coeff: t.coeff.conj(), ..t.clone() }).collect(),
        }
    }

    /// True when the function has a region-restricted term, i.e. a possible
    /// kink at `u = 0`.
    pub fn has_region_split(&self) -> bool {
        self.terms.iter().any(|t| t.region != Region::All)
    }

    fn term_value(&self, u: f64, a: u32, b: i32) -> f64 {
        let r2 = (self.radius_sq - u * u).max(0.0);
        let rb = if b % 2 == 0 { r2.powi(b / 2) } else { r2.sqrt().powi(b) };
        u.powi(a as i32) * rb
    }

    fn differentiated(&self, order: u32) -> Vec<MomentumTerm> {
        let mut terms = self.terms.clone();
        for _ in 0..order {
            let mut next = Vec::new();
            for t in &terms {
                // d/du (u^a R^b) = a u^{a−1} R^b − b u^{a+1} R^{b−2}
                if t.u_pow > 0 {
                    next.push(MomentumTerm { coeff: t.coeff * t.u_pow as f64, u_pow: t.u_pow - 1, ..t.clone() });
                }
                if t.r_pow != 0 {
                    next.push(MomentumTerm {
                        coeff: t.coeff * (-(t.r_pow as f64)),
                        u_pow: t.u_pow + 1,
                        r_pow: t.r_pow - 2,
                        region: t.region,
                    });
                }
            }
            terms = next;
        }
        terms
    }

    pub fn derivative(&self, p: f64, order: u32) -> Complex64 {
        self.eval_terms(&self.differentiated(order), p, None)
    }

    pub fn value(&self, p: f64) -> Complex64 {
        self.derivative(p, 0)
    }

    /// One-sided derivative; `right` selects the `u ≥ 0` side at `u = 0`.
    pub fn derivative_side(&self, p: f64, order: u32, right: bool) -> Complex64 {
        self.eval_terms(&self.differentiated(order), p, Some(right))
    }

    fn eval_terms(&self, terms: &[MomentumTerm], p: f64, side: Option<bool>) -> Complex64 {
        let u = p - self.center;
        terms
            .iter()
            .filter(|t| match side {
                None => t.region.contains(u),
                Some(right) => t.region.contains_side(u, right),
            })
            .map(|t| t.coeff * self.term_value(u, t.u_pow, t.r_pow))
            .sum()
    }
}
