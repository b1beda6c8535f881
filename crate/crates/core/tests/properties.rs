use std::f64::consts::{FRAC_PI_2, PI};

use nstorus::catalog::{build, potentials, Params, SystemId};
use nstorus::classical::Torus;
use nstorus::model::PiecewisePeriodicFunction;
use nstorus::parallel::{map_ordered, Execution};
use nstorus::predictor::{circle_lattice_sum, PredictOptions};
use nstorus::quantize::{build_matrix, find_nd_pairs, Level, MomentumBasis, PairOptions};
use num_complex::Complex64;
use proptest::prelude::*;

fn one_sided_slope(f: &PiecewisePeriodicFunction, x: f64, order: u32, right: bool) -> f64 {
    // derivative of order `order` from the (order − 1)-th derivative on one side
    let h = 1e-6;
    let s = if right { 1.0 } else { -1.0 };
    let g = |t: f64| f.derivative(t, order - 1);
    let (a, b) = (g(x + s * h), g(x + 2.0 * s * h));
    s * (b - a) / h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jumps_match_finite_differences(lambda in -3.0..3.0f64, k in 1u32..=4) {
        let cases = [
            (potentials::cos_plus_abs_sin(lambda).unwrap(), 0.0, 1),
            (potentials::cos_plus_abs_sin(lambda).unwrap(), PI, 1),
            (potentials::clipped_cos_power(k).unwrap(), FRAC_PI_2, k),
            (potentials::abs_cos().unwrap(), 1.5 * PI, 1),
        ];
        for (f, x, order) in &cases {
            let fd = one_sided_slope(f, *x, *order, true) - one_sided_slope(f, *x, *order, false);
            let exact = f.jump_at(*x, *order).unwrap();
            prop_assert!((fd - exact).abs() < 1e-4 * exact.abs().max(1.0), "{} {}", fd, exact);
        }
    }

    #[test]
    fn lattice_sums_quasi_periodic(x in 0.05..6.2f64, y in -2.0..2.0f64, k in 2u32..=5) {
        let w = circle_lattice_sum(k, x, y).unwrap();
        let shifted_y = circle_lattice_sum(k, x, y + 1.0).unwrap();
        let shifted_x = circle_lattice_sum(k, x + 2.0 * PI, y).unwrap() * Complex64::from_polar(1.0, 2.0 * PI * y);
        let tol = 1e-12 * w.norm().max(1.0);
        prop_assert!((w - shifted_y).norm() < tol);
        prop_assert!((w - shifted_x).norm() < tol);
    }

    #[test]
    fn congruent_actions_agree(e in 1.2..3.0f64, lambda in 0.1..2.0f64) {
        let entry = build(SystemId::H2, Params { lambda: Some(lambda), ..Default::default() }).unwrap();
        let e = e * lambda;
        let r = entry.regime_at(e).unwrap();
        let sys = entry.circle();
        let a = Torus::new(sys, e, r.plus).unwrap().action().unwrap();
        let b = Torus::new(sys, e, r.minus).unwrap().action().unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn reports_are_consistent(e in 1.5..3.0f64, k in 1u32..=4) {
        let entry = build(SystemId::Ex21, Params { k: Some(k), ..Default::default() }).unwrap();
        let r = entry.predict(e, PredictOptions::default()).unwrap();
        let t = r.period.unwrap();
        let d = r.splitting().unwrap();
        prop_assert!(d >= 0.0 && r.eta >= 0.0);
        prop_assert!((d - 2.0 * r.hbar * r.amplitude.norm() / t).abs() <= 1e-15 * d.max(1e-300));
        prop_assert!((r.eta - r.amplitude.norm() / PI).abs() <= 1e-15 * r.eta.max(1e-300));
    }

    #[test]
    fn pairs_are_ordered_and_small(gaps in prop::collection::vec(0.5..1.5f64, 6..20), tiny in prop::collection::vec(1e-9..1e-4f64, 20)) {
        let mut levels = Vec::new();
        let mut e = 0.0;
        for (g, t) in gaps.iter().zip(&tiny) {
            e += g;
            for x in [e, e + t] {
                levels.push(Level { energy: x, correction: 0.0, sector: Default::default(), p2: 0.0, dominant: 0 });
            }
        }
        let set = find_nd_pairs(&levels, &PairOptions::new((0.0, e + 1.0)), None).unwrap();
        prop_assert_eq!(set.pairs.len(), gaps.len());
        for p in &set.pairs {
            prop_assert!(p.delta >= 0.0 && p.upper >= p.lower);
            prop_assert!((p.mean - 0.5 * (p.lower + p.upper)).abs() < 1e-12);
            if let Some(eta) = p.eta {
                prop_assert!((0.0..1.0).contains(&eta));
            }
        }
    }

    #[test]
    fn hamiltonian_matrix_is_hermitian(lambda in -2.0..2.0f64, hbar in 0.05..0.5f64, p_c in -1.0..1.0f64) {
        let entry = build(SystemId::Lambda, Params { lambda: Some(lambda), hbar: Some(hbar), ..Default::default() }).unwrap();
        let sys = entry.circle();
        let basis = MomentumBasis::for_cutoff(sys, 3.0, 2.0, 400).unwrap();
        let m = build_matrix(sys, &basis).unwrap();
        prop_assert!((&m - m.adjoint()).norm() < 1e-12 * m.norm());
        let e32 = build(SystemId::Ex32, Params { p_c: Some(p_c), hbar: Some(hbar), ..Default::default() }).unwrap();
        let basis = MomentumBasis::for_cutoff(e32.circle(), 1.0, 2.0, 400).unwrap();
        let m = build_matrix(e32.circle(), &basis).unwrap();
        prop_assert!((&m - m.adjoint()).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn ordered_map_is_deterministic(v in prop::collection::vec(-1e3..1e3f64, 0..300), threads in 2usize..5) {
        let f = |x: &f64| x.sin() * x;
        let seq = map_ordered(&v, Execution::Sequential, f).unwrap();
        prop_assert_eq!(&seq, &map_ordered(&v, Execution::Parallel, f).unwrap());
        prop_assert_eq!(&seq, &map_ordered(&v, Execution::Threads(threads), f).unwrap());
    }
}
