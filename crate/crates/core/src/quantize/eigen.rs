//! Dense diagonalization split over exact symmetry sectors, with optional
//! double-double refinement of tridiagonal sectors.

use std::fmt;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::basis::{p2_expectation, MomentumBasis};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reflection {
    Symmetric,
    Antisymmetric,
}

/// Exact block of the matrix a level was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Sector {
    pub parity: Option<Parity>,
    pub reflection: Option<Reflection>,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.parity {
            Some(Parity::Even) => "even",
            Some(Parity::Odd) => "odd",
            None => "",
        };
        let r = match self.reflection {
            Some(Reflection::Symmetric) => "cos",
            Some(Reflection::Antisymmetric) => "sin",
            None => "",
        };
        match (p.is_empty(), r.is_empty()) {
            (true, true) => write!(f, "full"),
            (false, true) => write!(f, "{p}"),
            (true, false) => write!(f, "{r}"),
            (false, false) => write!(f, "{p}-{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    /// Low word of the double-double eigenvalue; zero when not refined.
    pub correction: f64,
    pub sector: Sector,
    pub p2: f64,
    /// Basis position carrying the largest weight.
    pub dominant: usize,
}

impl Level {
    /// `other − self` keeping the low words of both levels.
    pub fn gap_to(&self, other: &Level) -> f64 {
        (other.energy - self.energy) + (other.correction - self.correction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub levels: Vec<Level>,
    /// Column `i` is the eigenvector of `levels[i]` in the full basis.
    #[serde(skip)]
    pub vectors: Option<DMatrix<Complex64>>,
    pub basis: MomentumBasis,
}

impl SpectrumResult {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizeOptions {
    pub use_symmetry: bool,
    /// Levels inside this interval are refined where a sector is tridiagonal.
    pub refine_window: Option<(f64, f64)>,
    pub keep_vectors: bool,
    pub max_iterations: usize,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self { use_symmetry: true, refine_window: None, keep_vectors: true, max_iterations: 10_000 }
    }
}

/// One folded basis vector: `Σ w_i e_i` with `w² ∈ {1, ½}` given by `half`.
#[derive(Debug, Clone)]
struct FoldVec {
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct SectorSpec {
    label: Sector,
    vecs: Vec<FoldVec>,
}

fn identity_sector(n: usize) -> SectorSpec {
    SectorSpec { label: Sector::default(), vecs: (0..n).map(|i| FoldVec { entries: vec![(i, 1.0)] }).collect() }
}

fn entry(m: &DMatrix<Complex64>, a: &FoldVec, b: &FoldVec) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for &(i, wi) in &a.entries {
        for &(j, wj) in &b.entries {
            s += m[(i, j)] * (wi * wj);
        }
    }
    s
}

fn sector_matrix(m: &DMatrix<Complex64>, s: &SectorSpec) -> DMatrix<Complex64> {
    let k = s.vecs.len();
    DMatrix::from_fn(k, k, |a, b| entry(m, &s.vecs[a], &s.vecs[b]))
}

/// Splits by index parity when no entry couples positions an odd distance apart.
fn split_parity(m: &DMatrix<Complex64>, s: SectorSpec) -> Vec<SectorSpec> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1..n).step_by(2) {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                return vec![s];
            }
        }
    }
    let pick = |p: usize, par: Parity| SectorSpec {
        label: Sector { parity: Some(par), ..s.label },
        vecs: s.vecs.iter().enumerate().filter(|(i, _)| i % 2 == p).map(|(_, v)| v.clone()).collect(),
    };
    vec![pick(0, Parity::Even), pick(1, Parity::Odd)].into_iter().filter(|x| !x.vecs.is_empty()).collect()
}

/// Splits into symmetric and antisymmetric combinations of positions `a` and
/// `k − 1 − a` when the block is exactly invariant under that reversal.
fn split_reflection(m: &DMatrix<Complex64>, s: SectorSpec) -> Vec<SectorSpec> {
    let sub = sector_matrix(m, &s);
    let k = sub.nrows();
    if k < 2 {
        return vec![s];
    }
    for a in 0..k {
        for b in 0..=a {
            if sub[(k - 1 - a, k - 1 - b)] != sub[(a, b)] {
                return vec![s];
            }
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let combine = |a: &FoldVec, b: &FoldVec, sign: f64| FoldVec {
        entries: a
            .entries
            .iter()
            .map(|&(i, w)| (i, w * r))
            .chain(b.entries.iter().map(|&(i, w)| (i, sign * w * r)))
            .collect(),
    };
    let mut cos = Vec::new();
    let mut sin = Vec::new();
    for a in 0..k / 2 {
        cos.push(combine(&s.vecs[a], &s.vecs[k - 1 - a], 1.0));
        sin.push(combine(&s.vecs[a], &s.vecs[k - 1 - a], -1.0));
    }
    if k % 2 == 1 {
        cos.push(s.vecs[k / 2].clone());
    }
    vec![
        SectorSpec { label: Sector { reflection: Some(Reflection::Symmetric), ..s.label }, vecs: cos },
        SectorSpec { label: Sector { reflection: Some(Reflection::Antisymmetric), ..s.label }, vecs: sin },
    ]
}

fn sectors(m: &DMatrix<Complex64>) -> Vec<SectorSpec> {
    let n = m.nrows();
    let mut out = Vec::new();
    let by_parity = split_parity(m, identity_sector(n));
    let parity_found = by_parity.len() > 1;
    for s in by_parity {
        // an even-dimensional reflection mixes the two parity classes
        if parity_found && n.is_multiple_of(2) {
            out.push(s);
        } else {
            out.extend(split_reflection(m, s));
        }
    }
    out
}

/// Tridiagonal data with `b²` kept exactly in double-double.
struct Tridiagonal {
    d: Vec<TwoFloat>,
    b2: Vec<TwoFloat>,
}

impl Tridiagonal {
    /// Built from the raw sums of matrix entries; the fold weights enter only
    /// through their squares, which are exact.
    fn from_sector(m: &DMatrix<Complex64>, s: &SectorSpec) -> Option<Self> {
        let k = s.vecs.len();
        let mut d = Vec::with_capacity(k);
        let mut b2 = Vec::with_capacity(k.saturating_sub(1));
        for a in 0..k {
            for b in 0..a.saturating_sub(1) {
                if entry(m, &s.vecs[a], &s.vecs[b]) != Complex64::new(0.0, 0.0) {
                    return None;
                }
            }
            let diag = entry(m, &s.vecs[a], &s.vecs[a]);
            if diag.im != 0.0 {
                return None;
            }
            d.push(diagonal_exact(m, &s.vecs[a]));
            if a > 0 {
                b2.push(off_diagonal_sq(m, &s.vecs[a], &s.vecs[a - 1]));
            }
        }
        Some(Self { d, b2 })
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: TwoFloat) -> usize {
        let tiny = TwoFloat::from_f64(1e-300);
        let mut count = 0;
        let mut q = self.d[0] - x;
        for i in 0..self.d.len() {
            if i > 0 {
                q = (self.d[i] - x) - dd_div(self.b2[i - 1], q);
            }
            if q == TwoFloat::from_f64(0.0) {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue `index` (ascending) seeded with an f64 estimate.
    fn refine(&self, index: usize, estimate: f64, scale: f64) -> TwoFloat {
        let mut delta = 1e-12 * scale.max(estimate.abs()).max(1e-300);
        let mut lo = TwoFloat::from_f64(estimate - delta);
        let mut hi = TwoFloat::from_f64(estimate + delta);
        for _ in 0..200 {
            if self.count_below(lo) <= index {
                break;
            }
            delta *= 2.0;
            lo = TwoFloat::from_f64(estimate - delta);
        }
        for _ in 0..200 {
            if self.count_below(hi) > index {
                break;
            }
            delta *= 2.0;
            hi = TwoFloat::from_f64(estimate + delta);
        }
        let stop = 1e-31 * scale.max(1e-300);
        for _ in 0..220 {
            let mid = (lo + hi) / 2.0;
            if mid <= lo || mid >= hi || (hi - lo) < stop {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) / 2.0
    }
}

/// `a / b` with one correction step; `TwoFloat`'s own division keeps only the high word.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

fn off_diagonal_sq(m: &DMatrix<Complex64>, a: &FoldVec, b: &FoldVec) -> TwoFloat {
    // Σ w w' M with |w w'| ∈ {1, 1/√2, 1/2}; square the raw sum and the weight separately
    let mut raw = Complex64::new(0.0, 0.0);
    let mut w2 = None;
    for &(i, wi) in &a.entries {
        for &(j, wj) in &b.entries {
            let v = m[(i, j)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let w = wi * wj;
            let sq = exact_square_weight(w);
            match w2 {
                None => w2 = Some(sq),
                Some(prev) if prev == sq => {}
                Some(_) => {
                    // mixed weights: fall back to the rounded value
                    let e = entry(m, a, b);
                    return TwoFloat::new_mul(e.re, e.re) + TwoFloat::new_mul(e.im, e.im);
                }
            }
            raw += v * w.signum();
        }
    }
    let Some(w2) = w2 else { return TwoFloat::from_f64(0.0) };
    (TwoFloat::new_mul(raw.re, raw.re) + TwoFloat::new_mul(raw.im, raw.im)) * w2
}

/// `Σ w w' M` with the products `w w'` snapped to `1`, `½` or `¼`, summed in double-double.
fn diagonal_exact(m: &DMatrix<Complex64>, a: &FoldVec) -> TwoFloat {
    let mut s = TwoFloat::from_f64(0.0);
    for &(i, wi) in &a.entries {
        for &(j, wj) in &a.entries {
            let w = wi * wj;
            let snapped = [1.0, 0.5, 0.25].into_iter().find(|v| (w.abs() - v).abs() < 1e-15).unwrap_or(w.abs());
            s += m[(i, j)].re * (snapped * w.signum());
        }
    }
    s
}

fn exact_square_weight(w: f64) -> f64 {
    let a = w.abs();
    for (v, sq) in [(1.0, 1.0), (std::f64::consts::FRAC_1_SQRT_2, 0.5), (0.5, 0.25)] {
        if (a - v).abs() < 1e-15 {
            return sq;
        }
    }
    a * a
}

fn is_real(m: &DMatrix<Complex64>) -> bool {
    m.iter().all(|c| c.im == 0.0)
}

fn eig(m: &DMatrix<Complex64>, max_iterations: usize) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let fail = || Error::Eigen { max_iterations, dimension: n };
    if is_real(m) {
        let r = m.map(|c| c.re);
        let e = SymmetricEigen::try_new(r, f64::EPSILON, max_iterations).ok_or_else(fail)?;
        Ok((e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| Complex64::new(x, 0.0))))
    } else {
        let e = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iterations).ok_or_else(fail)?;
        Ok((e.eigenvalues.iter().copied().collect(), e.eigenvectors))
    }
}

fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NonHermitian(format!("{}×{} matrix", m.nrows(), m.ncols())));
    }
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                return Err(Error::NonHermitian(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
            }
        }
        if m[(i, i)].im.abs() > 1e-12 * scale {
            return Err(Error::NonHermitian(format!("diagonal entry {i} is not real")));
        }
    }
    Ok(())
}

/// Full eigendecomposition. Levels are sorted by energy, ties broken by the
/// dominant basis position.
pub fn diagonalize(matrix: &DMatrix<Complex64>, basis: &MomentumBasis, opts: &DiagonalizeOptions) -> Result<SpectrumResult> {
    check_hermitian(matrix)?;
    let n = matrix.nrows();
    if n != basis.dimension() {
        return Err(Error::Misuse(format!("matrix dimension {n} does not match basis dimension {}", basis.dimension())));
    }
    let specs = if opts.use_symmetry { sectors(matrix) } else { vec![identity_sector(n)] };
    let scale = matrix.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut found: Vec<(Level, Vec<Complex64>)> = Vec::with_capacity(n);
    for spec in &specs {
        let sub = sector_matrix(matrix, spec);
        let (vals, vecs) = eig(&sub, opts.max_iterations)?;
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let tri = opts.refine_window.and_then(|_| Tridiagonal::from_sector(matrix, spec));
        for (rank, &c) in order.iter().enumerate() {
            let mut full = vec![Complex64::new(0.0, 0.0); n];
            for (a, fv) in spec.vecs.iter().enumerate() {
                let coef = vecs[(a, c)];
                for &(i, w) in &fv.entries {
                    full[i] += coef * w;
                }
            }
            let (mut energy, mut correction) = (vals[c], 0.0);
            if let (Some(t), Some((lo, hi))) = (&tri, opts.refine_window) {
                if energy >= lo && energy <= hi {
                    let v = t.refine(rank, energy, scale);
                    energy = v.hi();
                    correction = v.lo();
                }
            }
            let dominant = full
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let level = Level { energy, correction, sector: spec.label, p2: p2_expectation(&full, basis), dominant };
            found.push((level, full));
        }
    }
    found.sort_by(|a, b| {
        a.0.energy
            .total_cmp(&b.0.energy)
            .then(a.0.correction.total_cmp(&b.0.correction))
            .then(a.0.dominant.cmp(&b.0.dominant))
    });
    let vectors = opts.keep_vectors.then(|| {
        let mut v = DMatrix::<Complex64>::zeros(n, n);
        for (col, (_, f)) in found.iter().enumerate() {
            for (row, c) in f.iter().enumerate() {
                v[(row, col)] = *c;
            }
        }
        v
    });
    Ok(SpectrumResult { levels: found.into_iter().map(|(l, _)| l).collect(), vectors, basis: basis.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let b = MomentumBasis::circle(0, 1.0, 0.0);
        assert!(diagonalize(&m, &b, &DiagonalizeOptions::default()).is_err());
        let b = MomentumBasis { kind: crate::quantize::BasisKind::Spin { twice_j: 1 }, hbar: 1.0, p_offset: 0.5 };
        let s = diagonalize(&m, &b, &DiagonalizeOptions::default()).unwrap();
        assert!((s.levels[0].energy + 1.0).abs() < 1e-15);
        assert!((s.levels[1].energy - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_sorted() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(-1.0), c(2.0)]));
        let b = MomentumBasis::circle(1, 1.0, 0.0);
        let s = diagonalize(&m, &b, &DiagonalizeOptions::default()).unwrap();
        assert_eq!(s.energies(), vec![-1.0, 2.0, 3.0]);
        assert_eq!(s.levels[0].dominant, 1);
    }

    #[test]
    fn sectors_match_plain_diagonalization() {
        // H1-like: p²/2 on a grid plus couplings at distance two
        let n = 41;
        let h = 0.1;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(((i as f64 - 20.0) * h).powi(2) / 2.0 + 0.5)
            } else if i.abs_diff(j) == 2 {
                c(0.25)
            } else {
                c(0.0)
            }
        });
        let b = MomentumBasis::circle(20, h, 0.0);
        let with = diagonalize(&m, &b, &DiagonalizeOptions { refine_window: Some((0.0, 10.0)), ..Default::default() }).unwrap();
        let without = diagonalize(&m, &b, &DiagonalizeOptions { use_symmetry: false, ..Default::default() }).unwrap();
        assert_eq!(specs_count(&m), 4);
        for (a, b) in with.levels.iter().zip(&without.levels) {
            assert!((a.energy - b.energy).abs() < 1e-12);
        }
        let v = with.vectors.unwrap();
        let g = v.adjoint() * &v;
        for i in 0..n {
            for j in 0..n {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - c(e)).norm() < 1e-10);
            }
        }
    }

    fn specs_count(m: &DMatrix<Complex64>) -> usize {
        sectors(m).len()
    }

    #[test]
    fn refinement_agrees_with_f64() {
        let n = 31;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(((i as f64) - 15.0).abs() * 0.07)
            } else if i.abs_diff(j) == 2 {
                c(0.3)
            } else {
                c(0.0)
            }
        });
        let b = MomentumBasis::circle(15, 0.07, 0.0);
        let plain = diagonalize(&m, &b, &DiagonalizeOptions::default()).unwrap();
        let fine = diagonalize(&m, &b, &DiagonalizeOptions { refine_window: Some((-10.0, 10.0)), ..Default::default() }).unwrap();
        for (a, b) in plain.levels.iter().zip(&fine.levels) {
            assert!((a.energy - (b.energy + b.correction)).abs() < 1e-13);
        }
        assert!(fine.levels.iter().any(|l| l.correction != 0.0));
    }

    #[test]
    fn double_double_division() {
        let a = dd_div(TwoFloat::from_f64(1.0), TwoFloat::from_f64(3.0));
        assert!((a * 3.0 - 1.0).hi().abs() < 1e-31);
        let q = TwoFloat::new_add(0.7, 1e-20);
        let r = dd_div(TwoFloat::from_f64(0.0625), q);
        assert!((r * q - 0.0625).hi().abs() < 1e-32);
    }

    #[test]
    fn tiny_splitting_resolved() {
        // cos²x chain at ħ = 0.02; reference values from a 60-digit Sturm bisection
        // of the same f64 diagonal entries
        let (nmax, h) = (137usize, 0.02);
        let n = 2 * nmax + 1;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(((i as f64 - nmax as f64) * h).powi(2) / 2.0 + 0.5)
            } else if i.abs_diff(j) == 2 {
                c(0.25)
            } else {
                c(0.0)
            }
        });
        let b = MomentumBasis::circle(nmax, h, 0.0);
        let s = diagonalize(&m, &b, &DiagonalizeOptions { refine_window: Some((1.42, 1.44)), ..Default::default() }).unwrap();
        let pair: Vec<_> = s.levels.iter().filter(|l| (l.energy - 1.4335).abs() < 1e-3).collect();
        assert_eq!(pair.len(), 2);
        let v = |l: &Level| TwoFloat::new_add(l.energy, l.correction);
        let split = (v(pair[1]) - v(pair[0])).hi();
        assert!((split - 1.9144e-22).abs() < 1e-26, "{split:e}");
        let reference = TwoFloat::new_add(1.4335259305004646, 3.976186035912243e-18);
        assert!((v(pair[0]) - reference).hi().abs() < 1e-29);
    }
}
