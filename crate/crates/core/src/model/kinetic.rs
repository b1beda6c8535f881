//! Kinetic energies `E_k(p)` as piecewise polynomials on the momentum line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KINK_TOL: f64 = 1e-12;

/// `Σ c_i (p − origin)^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyPiece {
    pub origin: f64,
    pub coeffs: Vec<f64>,
}

impl PolyPiece {
    pub fn derivative(&self, p: f64, order: u32) -> f64 {
        let t = p - self.origin;
        let n = order as usize;
        let mut acc = 0.0;
        for i in (n..self.coeffs.len()).rev() {
            let ff: f64 = (0..n).map(|j| (i - j) as f64).product();
            acc = acc * t + self.coeffs[i] * ff;
        }
        acc
    }
}

/// Polynomial pieces separated by `breaks`; piece `i` covers
/// `[breaks[i-1], breaks[i])`, so a break point belongs to the piece on its right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    pub breaks: Vec<f64>,
    pub pieces: Vec<PolyPiece>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, pieces: Vec<PolyPiece>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(Error::InvalidFunction("need one more piece than breaks".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFunction("breaks must increase".into()));
        }
        Ok(Self { breaks, pieces })
    }

    pub fn single(piece: PolyPiece) -> Self {
        Self { breaks: Vec::new(), pieces: vec![piece] }
    }

    fn piece_index(&self, p: f64) -> usize {
        self.breaks.iter().take_while(|&&b| p >= b).count()
    }

    pub fn derivative(&self, p: f64, order: u32) -> f64 {
        self.pieces[self.piece_index(p)].derivative(p, order)
    }

    pub fn one_sided(&self, p: f64, order: u32) -> (f64, f64) {
        let right = self.piece_index(p);
        let left = self.breaks.iter().take_while(|&&b| p > b).count();
        (self.pieces[left].derivative(p, order), self.pieces[right].derivative(p, order))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticForm {
    pub label: String,
    pub function: PiecewisePolynomial,
    /// Centre `c` of the reflection symmetry `E(c + q) = E(c − q)`, when present.
    pub symmetry_center: Option<f64>,
}

impl KineticForm {
    pub fn new(label: impl Into<String>, function: PiecewisePolynomial, symmetry_center: Option<f64>) -> Result<Self> {
        let k = Self { label: label.into(), function, symmetry_center };
        if let Some(c) = symmetry_center {
            for i in 0..128 {
                let q = 0.05 + 0.11 * i as f64;
                let (a, b) = (k.value(c + q), k.value(c - q));
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidFunction(format!("declared symmetry about {c} fails at offset {q}")));
                }
            }
        }
        Ok(k)
    }

    /// `p²/2`.
    pub fn quadratic() -> Self {
        Self {
            label: "p^2/2".into(),
            function: PiecewisePolynomial::single(PolyPiece { origin: 0.0, coeffs: vec![0.0, 0.0, 0.5] }),
            symmetry_center: Some(0.0),
        }
    }

    /// `|p − c|`.
    pub fn abs(center: f64) -> Self {
        Self {
            label: format!("|p - {center}|"),
            function: PiecewisePolynomial {
                breaks: vec![center],
                pieces: vec![
                    PolyPiece { origin: center, coeffs: vec![0.0, -1.0] },
                    PolyPiece { origin: center, coeffs: vec![0.0, 1.0] },
                ],
            },
            symmetry_center: Some(center),
        }
    }

    /// `(p² − 1)²`.
    pub fn double_well() -> Self {
        Self {
            label: "(p^2-1)^2".into(),
            function: PiecewisePolynomial::single(PolyPiece { origin: 0.0, coeffs: vec![1.0, 0.0, -2.0, 0.0, 1.0] }),
            symmetry_center: Some(0.0),
        }
    }

    pub fn value(&self, p: f64) -> f64 {
        self.function.derivative(p, 0)
    }

    /// `dE/dp`; the right-hand piece at a kink.
    pub fn velocity(&self, p: f64) -> f64 {
        self.function.derivative(p, 1)
    }

    pub fn derivative(&self, p: f64, order: u32) -> f64 {
        self.function.derivative(p, order)
    }

    /// Right minus left limit of the derivative of `order` at `p`.
    pub fn jump(&self, p: f64, order: u32) -> f64 {
        let (l, r) = self.function.one_sided(p, order);
        r - l
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.function.breaks
    }

    /// Time-reversal symmetry `E(−p) = E(p)`.
    pub fn is_time_reversal_symmetric(&self) -> bool {
        self.symmetry_center.is_some_and(|c| c.abs() < KINK_TOL)
    }

    /// Check `E → ∞` in both directions by sampling out to `|p| = reach`.
    pub fn grows_beyond(&self, level: f64, reach: f64) -> bool {
        self.value(reach) > level && self.value(-reach) > level
    }
}
