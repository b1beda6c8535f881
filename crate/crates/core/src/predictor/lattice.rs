use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::TWO_PI;

const TAIL_TOL: f64 = 1e-12;

/// `W_k(x, y) = Σ_q e^{i2πqy} / (x + 2πq)^k`.
///
/// `k = 2, 3` use closed forms valid for `y ∈ [0, 1]` after reducing `y`
/// modulo one; larger `k` sum a symmetric window around the reduced `x`.
pub fn circle_lattice_sum(k: u32, x: f64, y: f64) -> Result<Complex64> {
    if k < 2 {
        return Err(Error::OutOfRange { name: "k".into(), value: k as f64, allowed: ">= 2".into() });
    }
    let r = x.rem_euclid(TWO_PI);
    if r.min(TWO_PI - r) < 1e-13 * x.abs().max(1.0) {
        return Err(Error::DivergentSum { x });
    }
    let y = y - y.floor();
    let i = Complex64::i();
    let s = (0.5 * x).sin();
    let phase = Complex64::from_polar(1.0, -x * y);
    match k {
        2 => Ok((1.0 + y * (Complex64::from_polar(1.0, x) - 1.0)) * phase / (4.0 * s * s)),
        3 => {
            let num = (0.5 * x).cos() + 2.0 * i * y * s - 2.0 * y * y * s * s * Complex64::from_polar(1.0, 0.5 * x);
            Ok(num * phase / (8.0 * s * s * s))
        }
        _ => Ok(truncated(k, x, y)),
    }
}

fn truncated(k: u32, x: f64, y: f64) -> Complex64 {
    let m = (x / TWO_PI).floor();
    let x0 = x - TWO_PI * m;
    let kf = k as f64;
    // Σ_{|q|>Q} |x0 + 2πq|^{−k} ≤ 2(2π)^{−k}(Q−1)^{1−k}/(k−1)
    let mut q_max = 2usize;
    while 2.0 * TWO_PI.powf(-kf) * ((q_max - 1) as f64).powf(1.0 - kf) / (kf - 1.0) >= TAIL_TOL {
        q_max *= 2;
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for q in (1..=q_max as i64).rev() {
        for qq in [q, -q] {
            let d = x0 + TWO_PI * qq as f64;
            sum += Complex64::from_polar(1.0, TWO_PI * qq as f64 * y) / d.powi(k as i32);
        }
    }
    sum += 1.0 / x0.powi(k as i32);
    // W(x0 + 2πm, y) = e^{−i2πmy} W(x0, y)
    sum * Complex64::from_polar(1.0, -TWO_PI * m * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosecant_identity() {
        let w = circle_lattice_sum(2, 1.0, 0.0).unwrap();
        assert!((w.re - 1.0 / (4.0 * 0.5f64.sin().powi(2))).abs() < 1e-14);
        assert!(w.im.abs() < 1e-15);
    }

    #[test]
    fn divergent_at_multiples_of_two_pi() {
        assert!(matches!(circle_lattice_sum(2, 0.0, 0.3), Err(Error::DivergentSum { .. })));
        assert!(matches!(circle_lattice_sum(4, 2.0 * TWO_PI, 0.3), Err(Error::DivergentSum { .. })));
    }

    #[test]
    fn higher_order_quasi_periodic() {
        let a = circle_lattice_sum(4, 1.3 + TWO_PI, 0.3).unwrap();
        let b = circle_lattice_sum(4, 1.3, 0.3).unwrap() * Complex64::from_polar(1.0, -TWO_PI * 0.3);
        assert!((a - b).norm() < 1e-12);
    }

    fn brute(k: u32, x: f64, y: f64, q_max: i64) -> Complex64 {
        (-q_max..=q_max)
            .map(|q| Complex64::from_polar(1.0, TWO_PI * q as f64 * y) / (x + TWO_PI * q as f64).powi(k as i32))
            .sum()
    }

    #[test]
    fn periodic_in_y() {
        for k in [2, 3, 5] {
            let a = circle_lattice_sum(k, 1.0, 0.3).unwrap();
            let b = circle_lattice_sum(k, 1.0, 1.3).unwrap();
            assert!((a - b).norm() < 1e-12);
            let c = circle_lattice_sum(k, 1.0 + TWO_PI, 0.3).unwrap() * Complex64::from_polar(1.0, TWO_PI * 0.3);
            assert!((a - c).norm() < 1e-12);
        }
    }

    #[test]
    fn w3_at_pi_half() {
        let w = circle_lattice_sum(3, std::f64::consts::PI, 0.5).unwrap();
        assert!((w - brute(3, std::f64::consts::PI, 0.5, 100_000)).norm() < 1e-8);
    }

    #[test]
    fn truncated_sum_matches_closed_forms() {
        for (x, y) in [(0.2, 0.0), (1.0, 0.25), (5.0, 0.9)] {
            let w = circle_lattice_sum(4, x, y).unwrap();
            assert!((w - brute(4, x, y, 20_000)).norm() < 1e-12 * w.norm());
            assert!((truncated(3, x, y) - circle_lattice_sum(3, x, y).unwrap()).norm() < 1e-10);
        }
    }
}
