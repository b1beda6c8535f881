use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{CatalogEntry, SystemId};
use crate::error::{Error, Result};
use crate::numerics::TWO_PI;
use crate::predictor::circle_lattice_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    /// `|𝒜⁽⁰⁾|`.
    pub amplitude: f64,
    /// `η⁽⁰⁾ = |𝒜⁽⁰⁾|/π`.
    pub eta: f64,
    /// `Δε⁽⁰⁾` where the period is known in closed form.
    pub delta: Option<f64>,
}

impl ClosedForm {
    fn from_amplitude(a: f64) -> Self {
        Self { amplitude: a, eta: a / PI, delta: None }
    }
}

/// `α_k = (1/2π)∫_{−π/2}^{π/2} cos^k x dx = Γ((k+1)/2) / (2Γ(1/2)Γ(k/2+1))`.
pub fn alpha_k(k: u32) -> f64 {
    let k = k as f64;
    gamma(0.5 * (k + 1.0)) / (2.0 * PI.sqrt() * gamma(0.5 * k + 1.0))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn sign(parity: Option<i64>) -> Result<f64> {
    let n = parity.ok_or(Error::MissingParity)?;
    Ok(if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 })
}

fn outside(e: f64, allowed: &str) -> Error {
    Error::OutOfRange { name: "energy".into(), value: e, allowed: allowed.into() }
}

pub(super) fn evaluate(entry: &CatalogEntry, e: f64, parity: Option<i64>) -> Result<Option<ClosedForm>> {
    if entry.params.lambda.is_some_and(|l| l != 1.0) && entry.id != SystemId::Lambda {
        return Ok(None);
    }
    let h = entry.hbar();
    let k = entry.params.k.unwrap_or(1);
    let out = match entry.id {
        SystemId::Ex21 => {
            if !(e > 1.0) {
                return Err(outside(e, "> 1"));
            }
            let kf = k as f64;
            let eta = factorial(k) * h.powi(k as i32) / (2f64.powi(k as i32) * PI * (2.0 * e).powf(0.5 * kf + 1.0))
                * ((2.0 * e).sqrt() * PI / h + kf * PI / 2.0).sin().abs();
            ClosedForm { amplitude: PI * eta, eta, delta: None }
        }
        SystemId::Ex22 => {
            if !(e > 1.0) {
                return Err(outside(e, "> 1"));
            }
            let delta = factorial(k) * h.powi(k as i32 + 1) / (2f64.powi(k as i32) * PI * e.powi(k as i32 + 1))
                * (alpha_k(k) * PI / h + k as f64 * PI / 2.0).sin().abs();
            // T = 2π for E_k = |p|
            ClosedForm { amplitude: PI * delta / h, eta: delta / h, delta: Some(delta) }
        }
        SystemId::Ex31 => {
            if !(e > 0.0) || e == 1.0 {
                return Err(outside(e, "(0, 1) or (1, inf)"));
            }
            let se = e.sqrt();
            let a = if e < 1.0 {
                let s = sign(parity)?;
                let c = (1.0 - e).sqrt();
                h / (4.0 * PI * se)
                    * ((1.0 + se).powf(-1.5) + (1.0 - se).powf(-1.5) + s * 4.0 / ((1.0 + c) * (1.0 - e).powf(0.25))).abs()
            } else {
                h / (4.0 * PI * se * (1.0 + se).powf(1.5))
            };
            ClosedForm::from_amplitude(a)
        }
        SystemId::Ex32 => {
            if !(e > 0.0 && e < 1.0) {
                return Err(outside(e, "(0, 1)"));
            }
            let p_c = entry.params.p_c.unwrap_or(0.0);
            let y = p_c / h;
            if (y - y.round() - 0.5).abs() < 1e-15 || (y - y.round() + 0.5).abs() < 1e-15 {
                return Ok(Some(ClosedForm::from_amplitude(0.0)));
            }
            let s = sign(parity)?;
            let xc = e.sqrt().acos();
            let w: Complex64 = circle_lattice_sum(2, 2.0 * xc, y)? + circle_lattice_sum(2, TWO_PI - 2.0 * xc, y)?
                + 2.0 * s * circle_lattice_sum(2, PI, y)?;
            ClosedForm::from_amplitude(h / (e.sqrt() * (1.0 - e).sqrt()) * w.norm())
        }
        SystemId::Ex33 => {
            let spin = entry.spin().expect("spin entry");
            let xi = e / spin.radius().powi(2);
            if !(xi > -1.0 && xi < 0.0) {
                return Err(outside(e, "xi in (-1, 0)"));
            }
            let jh = spin.j() + 0.5;
            let phi = PI * jh * (1.0 - (0.5 * (1.0 - xi)).sqrt());
            let a = if spin.is_integer_spin() {
                phi.cos().abs() / (2.0 * jh * jh * (1.0 - xi).powi(2))
            } else {
                ((3.0 + xi) / (SQRT_2 * (1.0 - xi).powf(1.5)) * phi.sin() + 0.5).abs()
                    / (4.0 * jh * jh * (1.0 - xi * xi).sqrt())
            };
            ClosedForm::from_amplitude(a)
        }
        _ => return Ok(None),
    };
    Ok(Some(out))
}

/// `H = (J₊² + J₋²)/2 + J₃²·[m ≥ 0]` in the `J₃` eigenbasis `m = −j..=j`.
pub fn spin_matrix(twice_j: u32, hbar: f64) -> DMatrix<Complex64> {
    let n = twice_j as usize + 1;
    let j = twice_j as f64 / 2.0;
    let h2 = hbar * hbar;
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let m = i as f64 - j;
        if m >= 0.0 {
            out[(i, i)] = Complex64::new(m * m * h2, 0.0);
        }
        if i + 2 < n {
            let v = 0.5 * h2 * ((j - m) * (j + m + 1.0) * (j - m - 1.0) * (j + m + 2.0)).sqrt();
            out[(i + 2, i)] = Complex64::new(v, 0.0);
            out[(i, i + 2)] = Complex64::new(v, 0.0);
        }
    }
    out
}
