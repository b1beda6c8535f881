//! Hamiltonian matrices in the plane-wave and `|j, m⟩` bases.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{BasisKind, MomentumBasis};
use crate::error::{Error, Result};
use crate::model::{CircleSystem, PiecewisePeriodicFunction, Region, SpinSystem};
use crate::numerics::{integrate_with_breaks, QuadOptions, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FourierMethod {
    /// Segment-wise closed-form integrals of the stored smooth pieces.
    #[default]
    Exact,
    /// Adaptive quadrature split at segment boundaries.
    Quadrature,
}

/// Coefficients below this fraction of the function's scale are exact zeros
/// smeared by rounding; they are set to zero so symmetry blocks stay exact.
const FOURIER_SNAP: f64 = 1e-15;

/// `V_m = (1/2π) ∫_0^{2π} V(x) e^{−imx} dx`.
pub fn potential_fourier(f: &PiecewisePeriodicFunction, m: i64, method: FourierMethod) -> Result<Complex64> {
    match method {
        FourierMethod::Exact => Ok(f.fourier_coefficient(m)),
        FourierMethod::Quadrature => {
            let mut points: Vec<f64> = f.segments().iter().map(|s| s.start).collect();
            points.push(TWO_PI);
            let r = integrate_with_breaks(
                |x: f64| f.value(x) * Complex64::from_polar(1.0, -(m as f64) * x),
                &points,
                QuadOptions { abs_tol: 1e-13 * TWO_PI, rel_tol: 0.0, max_panels: 200_000 },
            )?;
            Ok(r.value / TWO_PI)
        }
    }
}

fn snap(c: Complex64, scale: f64) -> Complex64 {
    let t = FOURIER_SNAP * scale;
    Complex64::new(if c.re.abs() < t { 0.0 } else { c.re }, if c.im.abs() < t { 0.0 } else { c.im })
}

/// Fourier coefficients `V_0 ..= V_{max}` with rounding-level entries zeroed.
pub fn potential_coefficients(f: &PiecewisePeriodicFunction, max: usize) -> Vec<Complex64> {
    let scale = f.max_value().abs().max(f.min_value().abs()).max(1e-300);
    (0..=max as i64).map(|m| snap(f.fourier_coefficient(m), scale)).collect()
}

/// Plane-wave matrix: `(r, r)` holds `E_k(p_r) + V_0 + T_0(p_r)` and
/// `(r + m, r)` holds `V_m + T_m` at the midpoint momentum `(r + m/2)ħ + p₀`.
/// Only the lower triangle is computed; the upper one is its conjugate.
pub fn build_matrix(system: &CircleSystem, basis: &MomentumBasis) -> Result<DMatrix<Complex64>> {
    let BasisKind::Circle { n_max } = basis.kind else {
        return Err(Error::Misuse("circle systems need a plane-wave basis".into()));
    };
    let n = basis.dimension();
    let v = potential_coefficients(&system.potential, 2 * n_max);
    let h = basis.hbar;
    let mut by_q: BTreeMap<i32, Vec<&crate::model::MixedTerm>> = BTreeMap::new();
    for t in &system.mixed_terms {
        by_q.entry(t.q).or_default().push(t);
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for col in 0..n {
        for row in col..n {
            let shift = (row - col) as i64;
            let mut e = v[shift as usize];
            let p_mid = 0.5 * (basis.label(row) + basis.label(col)) * h + basis.p_offset;
            if let Some(terms) = by_q.get(&(shift as i32)) {
                for t in terms {
                    e += t.coeff.value(p_mid);
                }
            }
            if row == col {
                e += system.kinetic.value(basis.momentum(col));
                e = Complex64::new(e.re, 0.0);
            }
            m[(row, col)] = e;
            if row != col {
                m[(col, row)] = e.conj();
            }
        }
    }
    Ok(m)
}

/// Banded operator: `diags[d][c]` is the entry at row `c + d`, column `c`.
#[derive(Debug, Clone)]
struct Banded {
    n: usize,
    diags: BTreeMap<i64, Vec<Complex64>>,
}

impl Banded {
    fn zero(n: usize) -> Self {
        Self { n, diags: BTreeMap::new() }
    }

    fn identity(n: usize) -> Self {
        let mut b = Self::zero(n);
        b.diags.insert(0, vec![Complex64::new(1.0, 0.0); n]);
        b
    }

    fn get_mut(&mut self, d: i64) -> &mut Vec<Complex64> {
        let n = self.n;
        self.diags.entry(d).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])
    }

    fn add_scaled(&mut self, other: &Banded, s: Complex64) {
        for (d, v) in &other.diags {
            let dst = self.get_mut(*d);
            for (a, b) in dst.iter_mut().zip(v) {
                *a += s * b;
            }
        }
    }

    fn mul(&self, other: &Banded) -> Banded {
        let mut out = Banded::zero(self.n);
        for (db, vb) in &other.diags {
            for (da, va) in &self.diags {
                let d = da + db;
                let mut acc = vec![Complex64::new(0.0, 0.0); self.n];
                let mut any = false;
                for (col, b) in vb.iter().enumerate() {
                    let k = col as i64 + db;
                    let row = k + da;
                    if k < 0 || k >= self.n as i64 || row < 0 || row >= self.n as i64 || b.norm() == 0.0 {
                        continue;
                    }
                    acc[col] += va[k as usize] * b;
                    any = true;
                }
                if any {
                    let dst = out.get_mut(d);
                    for (a, b) in dst.iter_mut().zip(acc) {
                        *a += b;
                    }
                }
            }
        }
        out
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (d, v) in &self.diags {
            for (col, x) in v.iter().enumerate() {
                let row = col as i64 + d;
                if row >= 0 && row < self.n as i64 {
                    m[(row as usize, col)] += *x;
                }
            }
        }
        m
    }
}

/// Spin Hamiltonian in the `J₃` eigenbasis `m = −j..=j` built from ladder
/// operators. Products of distinct components are symmetrized, and each block
/// enters as `(P H + H P)/2` with `P` the projector on its `J₃` region.
pub fn spin_operator_matrix(spin: &SpinSystem) -> Result<DMatrix<Complex64>> {
    let n = spin.dimension();
    let j = spin.j();
    let h = spin.hbar;
    let m_of = |i: usize| i as f64 - j;
    let mut jp = Banded::zero(n);
    {
        let d = jp.get_mut(1);
        for (col, x) in d.iter_mut().enumerate() {
            let m = m_of(col);
            if col + 1 < n {
                *x = Complex64::new(h * ((j - m) * (j + m + 1.0)).max(0.0).sqrt(), 0.0);
            }
        }
    }
    let mut jm = Banded::zero(n);
    {
        let d = jm.get_mut(-1);
        for (col, x) in d.iter_mut().enumerate() {
            let m = m_of(col);
            if col >= 1 {
                *x = Complex64::new(h * ((j + m) * (j - m + 1.0)).max(0.0).sqrt(), 0.0);
            }
        }
    }
    let mut j1 = Banded::zero(n);
    j1.add_scaled(&jp, Complex64::new(0.5, 0.0));
    j1.add_scaled(&jm, Complex64::new(0.5, 0.0));
    let mut j2 = Banded::zero(n);
    j2.add_scaled(&jp, Complex64::new(0.0, -0.5));
    j2.add_scaled(&jm, Complex64::new(0.0, 0.5));
    let mut j3 = Banded::zero(n);
    *j3.get_mut(0) = (0..n).map(|i| Complex64::new(m_of(i) * h, 0.0)).collect();
    let ops = [j1, j2, j3];

    let mut total = Banded::zero(n);
    for block in &spin.blocks {
        let mut hb = Banded::zero(n);
        for t in &block.terms {
            if t.degree() > 2 {
                return Err(Error::UnsupportedForm(format!("spin monomial of degree {}", t.degree())));
            }
            let mut factors: Vec<&Banded> = Vec::new();
            for (axis, &pw) in t.powers.iter().enumerate() {
                for _ in 0..pw {
                    factors.push(&ops[axis]);
                }
            }
            let term = match factors.len() {
                0 => Banded::identity(n),
                1 => factors[0].clone(),
                _ => {
                    let mut ab = factors[0].mul(factors[1]);
                    let ba = factors[1].mul(factors[0]);
                    ab.add_scaled(&ba, Complex64::new(1.0, 0.0));
                    let mut half = Banded::zero(n);
                    half.add_scaled(&ab, Complex64::new(0.5, 0.0));
                    half
                }
            };
            hb.add_scaled(&term, Complex64::new(t.coeff, 0.0));
        }
        if block.region == Region::All {
            total.add_scaled(&hb, Complex64::new(1.0, 0.0));
        } else {
            let mut p = Banded::zero(n);
            *p.get_mut(0) = (0..n)
                .map(|i| Complex64::new(if block.region.contains(m_of(i)) { 1.0 } else { 0.0 }, 0.0))
                .collect();
            total.add_scaled(&p.mul(&hb), Complex64::new(0.5, 0.0));
            total.add_scaled(&hb.mul(&p), Complex64::new(0.5, 0.0));
        }
    }
    Ok(total.dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KineticForm, SmoothFn, SpinBlock, SpinMonomial};

    #[test]
    fn free_rotor_matrix_is_diagonal() {
        let s = CircleSystem::separable(KineticForm::quadratic(), PiecewisePeriodicFunction::zero(), 1.0).unwrap();
        let b = MomentumBasis::circle(4, 1.0, 0.0);
        let m = build_matrix(&s, &b).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let expect = if i == j { (i as f64 - 4.0).powi(2) / 2.0 } else { 0.0 };
                assert_eq!(m[(i, j)], Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn abs_kinetic_plus_cos_squared() {
        let v = PiecewisePeriodicFunction::smooth(SmoothFn::cos_power(2)).unwrap();
        let s = CircleSystem::separable(KineticForm::abs(0.0), v, 0.02).unwrap();
        let b = MomentumBasis::circle(10, 0.02, 0.0);
        let m = build_matrix(&s, &b).unwrap();
        for i in 0..21 {
            assert!((m[(i, i)].re - ((i as f64 - 10.0) * 0.02).abs() - 0.5).abs() < 1e-15);
            for j in 0..21 {
                let d = i.abs_diff(j);
                if d == 2 {
                    assert!((m[(i, j)].re - 0.25).abs() < 1e-15);
                } else if d != 0 {
                    assert_eq!(m[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
        let mh = m.adjoint();
        assert_eq!(m, mh);
    }

    #[test]
    fn quadrature_fourier_matches_exact() {
        let c = SmoothFn::trig(0.0, vec![crate::model::Harmonic::cosine(1.0, 1.0)]);
        let half = std::f64::consts::FRAC_PI_2;
        let f = PiecewisePeriodicFunction::new(
            vec![
                crate::model::Segment { start: 0.0, end: half, f: c.clone() },
                crate::model::Segment { start: half, end: 3.0 * half, f: SmoothFn::zero() },
                crate::model::Segment { start: 3.0 * half, end: TWO_PI, f: c },
            ],
            vec![half, 3.0 * half],
            Some(1),
        )
        .unwrap();
        for m in [0, 1, 2, 5, 40] {
            let a = potential_fourier(&f, m, FourierMethod::Exact).unwrap();
            let b = potential_fourier(&f, m, FourierMethod::Quadrature).unwrap();
            assert!((a - b).norm() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn ladder_matrix_for_j_one() {
        let s = SpinSystem::new(
            2,
            1.0,
            vec![SpinBlock { region: Region::All, terms: vec![SpinMonomial::new(1.0, [2, 0, 0]), SpinMonomial::new(-1.0, [0, 2, 0])] }],
        )
        .unwrap();
        let m = spin_operator_matrix(&s).unwrap();
        // (J₊² + J₋²)/2 couples m = −1 and m = 1 with ħ²
        assert!((m[(2, 0)].re - 1.0).abs() < 1e-14);
        assert!(m[(1, 1)].norm() < 1e-14);
        assert_eq!(m.nrows(), 3);
    }
}
