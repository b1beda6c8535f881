//! Spin Hamiltonians on a fixed-`J` sphere and their circle form.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::PiecewisePeriodicFunction;
use super::kinetic::{KineticForm, PiecewisePolynomial, PolyPiece};
use super::momentum::{MomentumFunction, MomentumTerm, Region};
use super::system::{CircleSystem, MixedTerm};
use crate::error::{Error, Result};

/// `coeff · J₁^a J₂^b J₃^c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinMonomial {
    pub coeff: f64,
    pub powers: [u32; 3],
}

impl SpinMonomial {
    pub fn new(coeff: f64, powers: [u32; 3]) -> Self {
        Self { coeff, powers }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Polynomial in the spin components, active where `J₃` lies in `region`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinBlock {
    pub region: Region,
    pub terms: Vec<SpinMonomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    /// `2j`; `j` is a positive integer or half-integer.
    pub twice_j: u32,
    pub hbar: f64,
    pub blocks: Vec<SpinBlock>,
}

impl SpinSystem {
    pub fn new(twice_j: u32, hbar: f64, blocks: Vec<SpinBlock>) -> Result<Self> {
        if twice_j == 0 {
            return Err(Error::OutOfRange { name: "j".into(), value: 0.0, allowed: ">= 1/2".into() });
        }
        if !(hbar > 0.0) {
            return Err(Error::OutOfRange { name: "hbar".into(), value: hbar, allowed: "> 0".into() });
        }
        Ok(Self { twice_j, hbar, blocks })
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn is_integer_spin(&self) -> bool {
        self.twice_j.is_multiple_of(2)
    }

    /// Classical radius `J = (j + ½)ħ`, so the sphere area is `(2j + 1) · 2πħ`.
    pub fn radius(&self) -> f64 {
        (self.j() + 0.5) * self.hbar
    }

    /// `p₀ = 0` for integer `j`, `ħ/2` for half-integer `j`.
    pub fn p_offset(&self) -> f64 {
        if self.is_integer_spin() {
            0.0
        } else {
            0.5 * self.hbar
        }
    }

    pub fn dimension(&self) -> usize {
        self.twice_j as usize + 1
    }

    /// Classical Hamiltonian at a point of the sphere.
    pub fn evaluate(&self, j1: f64, j2: f64, j3: f64) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.region.contains(j3))
            .flat_map(|b| b.terms.iter())
            .map(|t| t.coeff * j1.powi(t.powers[0] as i32) * j2.powi(t.powers[1] as i32) * j3.powi(t.powers[2] as i32))
            .sum()
    }
}

/// Laurent polynomial in `e^{ix}` with complex coefficients.
type Harmonics = BTreeMap<i32, Complex64>;

fn mul_harmonics(a: &Harmonics, b: &Harmonics) -> Harmonics {
    let mut out = Harmonics::new();
    for (qa, ca) in a {
        for (qb, cb) in b {
            *out.entry(qa + qb).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
        }
    }
    out
}

/// Rewrite a spin Hamiltonian in the circle coordinates
/// `(J cos θ + p₀, φ) = (p, x)`, i.e. `J₃ = u = p − p₀`,
/// `J₁ = R cos x`, `J₂ = R sin x` with `R = sqrt(J² − u²)`.
pub fn spin_to_circle(spin: &SpinSystem) -> Result<CircleSystem> {
    let radius_sq = spin.radius().powi(2);
    let p0 = spin.p_offset();
    // (q, u_pow, r_pow, region) → coefficient
    let mut acc: BTreeMap<(i32, u32, i32, u8), Complex64> = BTreeMap::new();
    let region_key = |r: Region| match r {
        Region::All => 0u8,
        Region::NonNegative => 1,
        Region::Negative => 2,
    };
    let cos_h: Harmonics = [(1, Complex64::new(0.5, 0.0)), (-1, Complex64::new(0.5, 0.0))].into_iter().collect();
    let sin_h: Harmonics = [(1, Complex64::new(0.0, -0.5)), (-1, Complex64::new(0.0, 0.5))].into_iter().collect();
    for block in &spin.blocks {
        for t in &block.terms {
            if t.degree() > 2 {
                return Err(Error::UnsupportedForm(format!(
                    "spin monomial of degree {} (at most 2 is supported)",
                    t.degree()
                )));
            }
            let mut h: Harmonics = [(0, Complex64::new(t.coeff, 0.0))].into_iter().collect();
            for _ in 0..t.powers[0] {
                h = mul_harmonics(&h, &cos_h);
            }
            for _ in 0..t.powers[1] {
                h = mul_harmonics(&h, &sin_h);
            }
            let rp = t.powers[0] + t.powers[1];
            let up = t.powers[2];
            // R² = J² − u² is expanded so only R⁰ and R¹ survive
            let expansions: Vec<(f64, u32, i32)> = match rp {
                0 => vec![(1.0, up, 0)],
                1 => vec![(1.0, up, 1)],
                _ => vec![(radius_sq, up, 0), (-1.0, up + 2, 0)],
            };
            for (q, c) in &h {
                for &(f, u, r) in &expansions {
                    *acc.entry((*q, u, r, region_key(block.region))).or_insert(Complex64::new(0.0, 0.0)) += c * f;
                }
            }
        }
    }
    // fold All into the two half regions, then re-merge identical halves
    let mut halves: BTreeMap<(i32, u32, i32), (Complex64, Complex64)> = BTreeMap::new();
    for ((q, u, r, reg), c) in acc {
        let e = halves.entry((q, u, r)).or_insert((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        match reg {
            0 => {
                e.0 += c;
                e.1 += c;
            }
            1 => e.0 += c,
            _ => e.1 += c,
        }
    }
    let zero = |c: Complex64| c.norm() <= 1e-14 * radius_sq.max(1.0);
    let mut by_q: BTreeMap<i32, Vec<MomentumTerm>> = BTreeMap::new();
    for ((q, u, r), (nonneg, neg)) in halves {
        let terms = by_q.entry(q).or_default();
        if (nonneg - neg).norm() <= 1e-14 * radius_sq.max(1.0) {
            if !zero(nonneg) {
                terms.push(MomentumTerm { coeff: nonneg, u_pow: u, r_pow: r, region: Region::All });
            }
        } else {
            if !zero(nonneg) {
                terms.push(MomentumTerm { coeff: nonneg, u_pow: u, r_pow: r, region: Region::NonNegative });
            }
            if !zero(neg) {
                terms.push(MomentumTerm { coeff: neg, u_pow: u, r_pow: r, region: Region::Negative });
            }
        }
    }
    let diagonal = by_q.remove(&0).unwrap_or_default();
    let kinetic = kinetic_from_terms(&diagonal, p0)?;
    let mixed_terms = by_q
        .into_iter()
        .filter(|(_, t)| !t.is_empty())
        .map(|(q, terms)| MixedTerm { q, coeff: MomentumFunction::new(p0, radius_sq, terms) })
        .filter(|m| !m.coeff.is_zero())
        .collect();
    CircleSystem::new(kinetic, PiecewisePeriodicFunction::zero(), mixed_terms, spin.hbar, p0)
}

fn kinetic_from_terms(terms: &[MomentumTerm], p0: f64) -> Result<KineticForm> {
    let mut upper = vec![0.0; 5];
    let mut lower = vec![0.0; 5];
    for t in terms {
        if t.r_pow != 0 || t.coeff.im.abs() > 1e-14 {
            return Err(Error::UnsupportedForm("diagonal part is not a real polynomial in J₃".into()));
        }
        let i = t.u_pow as usize;
        if t.region.contains_nonneg() {
            upper[i] += t.coeff.re;
        }
        if t.region.contains_neg() {
            lower[i] += t.coeff.re;
        }
    }
    let trim = |mut v: Vec<f64>| {
        while v.len() > 1 && *v.last().unwrap() == 0.0 {
            v.pop();
        }
        v
    };
    let (upper, lower) = (trim(upper), trim(lower));
    let label = "spin diagonal".to_string();
    let function = if upper == lower {
        PiecewisePolynomial::single(PolyPiece { origin: p0, coeffs: upper })
    } else {
        PiecewisePolynomial::new(
            vec![p0],
            vec![PolyPiece { origin: p0, coeffs: lower }, PolyPiece { origin: p0, coeffs: upper }],
        )?
    };
    Ok(KineticForm { label, function, symmetry_center: None })
}

impl Region {
    fn contains_nonneg(&self) -> bool {
        matches!(self, Region::All | Region::NonNegative)
    }
    fn contains_neg(&self) -> bool {
        matches!(self, Region::All | Region::Negative)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_blocks() -> Vec<SpinBlock> {
        vec![
            SpinBlock {
                region: Region::NonNegative,
                terms: vec![
                    SpinMonomial::new(1.0, [2, 0, 0]),
                    SpinMonomial::new(-1.0, [0, 2, 0]),
                    SpinMonomial::new(1.0, [0, 0, 2]),
                ],
            },
            SpinBlock {
                region: Region::Negative,
                terms: vec![SpinMonomial::new(1.0, [2, 0, 0]), SpinMonomial::new(-1.0, [0, 2, 0])],
            },
        ]
    }

    #[test]
    fn j3_maps_to_linear_kinetic() {
        let s = SpinSystem::new(3, 0.2, vec![SpinBlock { region: Region::All, terms: vec![SpinMonomial::new(1.0, [0, 0, 1])] }])
            .unwrap();
        let c = spin_to_circle(&s).unwrap();
        assert!(c.mixed_terms.is_empty());
        let p0 = s.p_offset();
        assert_eq!(p0, 0.1);
        assert!((c.kinetic.value(0.7) - (0.7 - p0)).abs() < 1e-15);
    }

    #[test]
    fn sphere_constraint_is_constant() {
        let s = SpinSystem::new(
            10,
            0.1,
            vec![SpinBlock {
                region: Region::All,
                terms: vec![SpinMonomial::new(1.0, [2, 0, 0]), SpinMonomial::new(1.0, [0, 2, 0]), SpinMonomial::new(1.0, [0, 0, 2])],
            }],
        )
        .unwrap();
        let c = spin_to_circle(&s).unwrap();
        assert!(c.mixed_terms.is_empty());
        let j2 = s.radius().powi(2);
        for p in [-0.3, 0.0, 0.2] {
            assert!((c.kinetic.value(p) - j2).abs() < 1e-14);
        }
    }

    #[test]
    fn piecewise_example_coefficients() {
        let s = SpinSystem::new(200, 1.0 / 100.5, example_blocks()).unwrap();
        let c = spin_to_circle(&s).unwrap();
        let j2 = s.radius().powi(2);
        let qs: Vec<i32> = c.mixed_terms.iter().map(|t| t.q).collect();
        assert_eq!(qs, vec![-2, 2]);
        for t in &c.mixed_terms {
            for p in [-0.8, -0.1, 0.0, 0.4] {
                assert!((t.coeff.value(p) - Complex64::new((j2 - p * p) / 2.0, 0.0)).norm() < 1e-14);
            }
        }
        assert_eq!(c.kinetic.value(0.5), 0.25);
        assert_eq!(c.kinetic.value(-0.5), 0.0);
        let loci = c.p_loci();
        assert_eq!(loci.len(), 1);
        assert_eq!(loci[0].order, 2);
    }

    #[test]
    fn circle_form_matches_sphere_evaluation() {
        let blocks = vec![
            SpinBlock {
                region: Region::NonNegative,
                terms: vec![SpinMonomial::new(0.7, [1, 1, 0]), SpinMonomial::new(-0.3, [1, 0, 1]), SpinMonomial::new(1.1, [0, 1, 0])],
            },
            SpinBlock { region: Region::Negative, terms: vec![SpinMonomial::new(0.4, [0, 2, 0]), SpinMonomial::new(2.0, [0, 0, 1])] },
        ];
        let s = SpinSystem::new(7, 0.3, blocks).unwrap();
        let c = spin_to_circle(&s).unwrap();
        let jr = s.radius();
        for i in 0..50 {
            let x = 0.13 * i as f64;
            let u = jr * (-0.95 + 1.9 * (i as f64 * 0.618).fract());
            let r = (jr * jr - u * u).sqrt();
            let direct = s.evaluate(r * x.cos(), r * x.sin(), u);
            let mapped = c.hamiltonian(x, u + s.p_offset());
            assert!((direct - mapped).abs() < 1e-10, "{direct} vs {mapped}");
        }
    }

    #[test]
    fn rejects_cubic_terms() {
        let s = SpinSystem::new(2, 1.0, vec![SpinBlock { region: Region::All, terms: vec![SpinMonomial::new(1.0, [1, 1, 1])] }])
            .unwrap();
        assert!(matches!(spin_to_circle(&s), Err(Error::UnsupportedForm(_))));
    }
}
