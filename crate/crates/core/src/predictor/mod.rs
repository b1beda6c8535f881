//! Leading-order splitting predictions from transition paths.

pub mod lattice;

pub use lattice::circle_lattice_sum;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{find_transition_paths, CausticKind, Torus, TorusClass, TransitionPath};
use crate::error::{Error, Result};
use crate::model::{Axis, CircleSystem, PiecewisePeriodicFunction};
use crate::numerics::TWO_PI;

/// Treatment of p-line path lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Topology {
    /// `1/len^{k+1}` replaced by `W_{k+1}(len, p*/ħ)` on the circle.
    #[default]
    Compact,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum MaslovRule {
    /// Count caustics crossed by the torus segments of the loop.
    #[default]
    Auto,
    Fixed(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    /// `|𝒜| < 10⁻³ max|r_j|`: higher orders dominate.
    InterferenceZero,
    /// No transition paths (smooth system); the splitting is beyond all orders in ħ.
    BelowPowerLawFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathContribution {
    pub path: TransitionPath,
    pub reflection: Complex64,
    /// Phase relative to the first path.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub amplitude: Complex64,
    pub delta: Option<f64>,
    pub eta: f64,
    pub paths: Vec<PathContribution>,
    pub period: Option<f64>,
    pub hbar: f64,
    pub flags: Vec<Flag>,
}

impl PredictionReport {
    /// `Δε = 2ħ|𝒜|/T`.
    pub fn splitting(&self) -> Result<f64> {
        self.delta.ok_or_else(|| Error::Configuration("a period is needed to convert the amplitude into a splitting".into()))
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `r = (iħ)^k ∧ / (len^{k+1} √|v v′|)`, with the lattice sum in place of
/// `len^{−(k+1)}` for p-lines on the circle.
pub fn reflection_coefficient(path: &TransitionPath, hbar: f64, topology: Topology) -> Result<Complex64> {
    let k = path.order;
    let (v0, v1) = path.velocities;
    if v0 == 0.0 || v1 == 0.0 {
        return Err(Error::SingularPath("zero velocity at a path endpoint".into()));
    }
    if path.length == 0.0 {
        return Err(Error::SingularPath("zero path length".into()));
    }
    let pre = i_pow(k) * hbar.powi(k as i32) * path.jump / (v0 * v1).abs().sqrt();
    let geometry = match (path.axis(), topology) {
        (Axis::P, Topology::Compact) => circle_lattice_sum(k + 1, path.length, path.locus.location / hbar)?,
        _ => Complex64::new(path.length.powi(-(k as i32 + 1)), 0.0),
    };
    Ok(pre * geometry)
}

fn segment_integral(path: &TransitionPath) -> f64 {
    match path.axis() {
        Axis::X => 0.0,
        Axis::P => path.locus.location * path.length,
    }
}

/// `φ_j − φ_ref = (1/ħ)∮ p dx − Mπ/2` around the loop
/// `A_ref → A_j` on `O⁺`, `γ_j`, `A′_j → A′_ref` on `O⁻`, `γ_ref` reversed.
pub fn relative_phase(
    path: &TransitionPath,
    reference: &TransitionPath,
    plus: &Torus,
    minus: &Torus,
    maslov: MaslovRule,
) -> Result<f64> {
    if plus.energy != minus.energy {
        return Err(Error::EnergyMismatch { a: plus.energy, b: minus.energy });
    }
    if path == reference {
        return Ok(0.0);
    }
    let hbar = plus.system.hbar;
    let loop_integral = plus.walk(&reference.start, &path.start)? + segment_integral(path) - segment_integral(reference)
        + minus.walk(&path.end, &reference.end)?;
    let m = match maslov {
        MaslovRule::Fixed(m) => m,
        MaslovRule::Auto => {
            let mut kinds = Vec::new();
            if path.axis() == Axis::X || reference.axis() == Axis::X {
                kinds.push(CausticKind::X);
            }
            if path.axis() == Axis::P || reference.axis() == Axis::P {
                kinds.push(CausticKind::P);
            }
            let a = plus.caustics_between(plus.tau(&reference.start), plus.tau(&path.start), &kinds)?;
            let b = minus.caustics_between(minus.tau(&path.end), minus.tau(&reference.end), &kinds)?;
            (a + b) as i64
        }
    };
    Ok(loop_integral / hbar - m as f64 * std::f64::consts::FRAC_PI_2)
}

/// `𝒜 = Σ r_j e^{iφ_j}`, `Δε = 2ħ|𝒜|/T`, `η = |𝒜|/π`.
pub fn amplitude(paths: Vec<PathContribution>, hbar: f64, period: Option<f64>) -> PredictionReport {
    let a: Complex64 = paths.iter().map(|c| c.reflection * Complex64::from_polar(1.0, c.phase)).sum();
    let max_r = paths.iter().map(|c| c.reflection.norm()).fold(0.0, f64::max);
    let mut flags = Vec::new();
    if paths.is_empty() {
        flags.push(Flag::BelowPowerLawFloor);
    } else if a.norm() < 1e-3 * max_r {
        flags.push(Flag::InterferenceZero);
    }
    PredictionReport {
        amplitude: a,
        delta: period.map(|t| 2.0 * hbar * a.norm() / t),
        eta: a.norm() / std::f64::consts::PI,
        paths,
        period,
        hbar,
        flags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictOptions {
    pub topology: Topology,
    pub maslov: MaslovRule,
}

/// Path-sum prediction for the degenerate pair of tori `plus`, `minus`.
pub fn predict(plus: &Torus, minus: &Torus, opts: PredictOptions) -> Result<PredictionReport> {
    let hbar = plus.system.hbar;
    let paths = find_transition_paths(plus, minus)?;
    let period = plus.period()?;
    let mut out = Vec::with_capacity(paths.len());
    for p in &paths {
        out.push(PathContribution {
            path: p.clone(),
            reflection: reflection_coefficient(p, hbar, opts.topology)?,
            phase: relative_phase(p, &paths[0], plus, minus, opts.maslov)?,
        });
    }
    Ok(amplitude(out, hbar, Some(period)))
}

/// Direct formula for a time-reversal symmetric, monotone kinetic energy:
/// `Δε = (2ħ/T)|Σ_j (ħ^k/2^{k+1}) e^{2is(x_j)/ħ} ∧^k V(x_j) / (p^{k+1} E′_k(p))|`.
pub fn splitting_direct(system: &CircleSystem, energy: f64) -> Result<PredictionReport> {
    if !system.kinetic.is_time_reversal_symmetric() || system.has_mixed_terms() || system.p_offset != 0.0 {
        return Err(Error::Misuse("the direct formula needs E_k(p) = E_k(−p) and no mixed terms".into()));
    }
    let kin = &system.kinetic;
    let center = kin.symmetry_center.unwrap_or(0.0);
    let probe = [1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    if probe.iter().any(|&u| kin.velocity(center + u) <= 0.0) || center != 0.0 {
        return Err(Error::Misuse("the direct formula needs dE_k/dp > 0 for p > 0; use the path sum".into()));
    }
    let torus = Torus::new(system, energy, TorusClass::Rotational { join: 0.0, limit: f64::INFINITY })?;
    let hbar = system.hbar;
    let period = torus.period()?;
    let mut sum = Complex64::new(0.0, 0.0);
    for locus in system.x_loci()? {
        let x = locus.location;
        let k = locus.order as i32;
        let p = torus.sheet_momentum(0, x)?;
        let s = torus.phase_integral(x)?;
        let jump = locus.jump.value_at(x);
        sum += Complex64::from_polar(1.0, 2.0 * s / hbar) * hbar.powi(k) / 2f64.powi(k + 1) * jump
            / (p.powi(k + 1) * kin.velocity(p));
    }
    let has_paths = !system.potential.breakpoints().is_empty();
    let mut flags = Vec::new();
    if !has_paths {
        flags.push(Flag::BelowPowerLawFloor);
    }
    Ok(PredictionReport {
        amplitude: sum,
        delta: Some(2.0 * hbar * sum.norm() / period),
        eta: sum.norm() / std::f64::consts::PI,
        paths: Vec::new(),
        period: Some(period),
        hbar,
        flags,
    })
}

/// Large-`n` expansion of `f̂(n) = ∫_0^{2π} f e^{inx} dx` from derivative jumps:
/// `Σ_{l=0}^{L} (i^{l+1}/n^{l+1}) Σ_j e^{inx_j} ∧^l f(x_j)`.
pub fn fourier_asymptotics(f: &PiecewisePeriodicFunction, n: i64, order: u32) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::OutOfRange { name: "n".into(), value: 0.0, allowed: "|n| >= 1".into() });
    }
    let nf = n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for l in 0..=order {
        let mut inner = Complex64::new(0.0, 0.0);
        for &x in f.breakpoints() {
            inner += Complex64::from_polar(1.0, nf * x) * f.jump_at(x, l)?;
        }
        total += i_pow(l + 1) / nf.powi(l as i32 + 1) * inner;
    }
    Ok(total)
}

/// Normalized angle difference in `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TWO_PI);
    if r > std::f64::consts::PI {
        r - TWO_PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::catalog::{build, potentials, Params, SystemId};
    use crate::model::KineticForm;
    use crate::numerics::{integrate, QuadOptions};

    fn h2(hbar: f64) -> CircleSystem {
        build(SystemId::H2, Params { hbar: Some(hbar), ..Default::default() }).unwrap().circle().clone()
    }

    fn rotational_pair(sys: &CircleSystem, e: f64) -> (Torus<'_>, Torus<'_>) {
        let plus = Torus::new(sys, e, TorusClass::Rotational { join: 0.0, limit: f64::INFINITY }).unwrap();
        let minus = Torus::new(sys, e, TorusClass::Rotational { join: 0.0, limit: f64::NEG_INFINITY }).unwrap();
        (plus, minus)
    }

    #[test]
    fn h2_reflection_coefficient() {
        let sys = h2(0.05);
        let (plus, minus) = rotational_pair(&sys, 2.0);
        let paths = find_transition_paths(&plus, &minus).unwrap();
        let p = paths.iter().find(|p| (p.locus.location - FRAC_PI_2).abs() < 1e-12).unwrap();
        let r = reflection_coefficient(p, 0.05, Topology::Compact).unwrap();
        assert!(r.re.abs() < 1e-18);
        assert!((r.im.abs() - 3.125e-3).abs() < 1e-15);
    }

    #[test]
    fn reflection_reduces_to_symmetric_form() {
        // (iħ)^k ∧ / ((2p*)^{k+1} ẋ*) for E_k = E_k(−p)
        let systems = [
            h2(0.05),
            build(SystemId::Ex21, Params { k: Some(3), ..Default::default() }).unwrap().circle().clone(),
        ];
        for sys in &systems {
            for e in [1.4, 2.0, 2.7] {
                let (plus, minus) = rotational_pair(sys, e);
                for p in find_transition_paths(&plus, &minus).unwrap() {
                    let x = p.locus.location;
                    let ps = plus.sheet_momentum(0, x).unwrap();
                    let k = p.order as i32;
                    let want = i_pow(p.order) * sys.hbar.powi(k) * p.jump
                        / ((2.0 * ps).powi(k + 1) * sys.kinetic.velocity(ps));
                    let got = reflection_coefficient(&p, sys.hbar, Topology::Compact).unwrap();
                    assert!((got - want).norm() < 1e-12 * want.norm(), "{e} {x}");
                }
            }
        }
    }

    #[test]
    fn singular_paths_rejected() {
        let sys = h2(0.05);
        let (plus, minus) = rotational_pair(&sys, 2.0);
        let mut p = find_transition_paths(&plus, &minus).unwrap().remove(0);
        p.velocities.0 = 0.0;
        assert!(matches!(reflection_coefficient(&p, 0.05, Topology::Plain), Err(Error::SingularPath(_))));
        p.velocities.0 = 1.0;
        p.length = 0.0;
        assert!(matches!(reflection_coefficient(&p, 0.05, Topology::Plain), Err(Error::SingularPath(_))));
    }

    #[test]
    fn h2_relative_phase_against_quadrature() {
        let hbar = 0.05;
        let sys = h2(hbar);
        let (plus, minus) = rotational_pair(&sys, 2.0);
        let paths = find_transition_paths(&plus, &minus).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(relative_phase(&paths[0], &paths[0], &plus, &minus, MaslovRule::Auto).unwrap(), 0.0);
        let phi = relative_phase(&paths[1], &paths[0], &plus, &minus, MaslovRule::Auto).unwrap();
        let q = integrate(|x| (2.0 * (2.0 - x.cos().abs())).sqrt(), FRAC_PI_2, 1.5 * PI, QuadOptions::default())
            .unwrap()
            .value;
        let want = 2.0 * q / hbar;
        assert!(wrap_phase(phi - want).abs() < 1e-9, "{phi} {want}");
    }

    #[test]
    fn path_sum_matches_direct_formula() {
        let sys = h2(0.05);
        for i in 0..10 {
            let e = 1.2 + 1.8 * i as f64 / 9.0;
            let (plus, minus) = rotational_pair(&sys, e);
            let a = predict(&plus, &minus, PredictOptions::default()).unwrap();
            let b = splitting_direct(&sys, e).unwrap();
            assert!((a.eta - b.eta).abs() < 1e-10 * b.eta, "{e}: {} {}", a.eta, b.eta);
            let (da, db) = (a.splitting().unwrap(), b.splitting().unwrap());
            assert!((da - db).abs() < 1e-10 * db);
            assert!((da - 2.0 * sys.hbar * a.amplitude.norm() / a.period.unwrap()).abs() < 1e-15 * da);
        }
    }

    #[test]
    fn direct_formula_examples() {
        let e21 = build(SystemId::Ex21, Params { hbar: Some(0.05), ..Default::default() }).unwrap();
        let r = splitting_direct(e21.circle(), 2.0).unwrap();
        assert!((r.eta - 0.05 / (16.0 * PI)).abs() < 1e-12);

        // the closed form holds on EBK levels, where the path phases reduce to α_kπ/ħ
        let e22 = build(SystemId::Ex22, Params { hbar: Some(0.04), k: Some(2), ..Default::default() }).unwrap();
        for lvl in e22.ebk_levels((1.9, 2.1)).unwrap() {
            let r = splitting_direct(e22.circle(), lvl.energy).unwrap();
            let want = e22.closed_form(lvl.energy, None).unwrap().unwrap().delta.unwrap();
            assert!((r.delta.unwrap() - want).abs() < 1e-8 * want);
        }

        let smooth = build(SystemId::H1, Params::default()).unwrap();
        let r = splitting_direct(smooth.circle(), 2.0).unwrap();
        assert_eq!(r.delta, Some(0.0));
        assert_eq!(r.flags, vec![Flag::BelowPowerLawFloor]);

        let dw = CircleSystem::separable(KineticForm::double_well(), potentials::abs_cos().unwrap(), 0.05).unwrap();
        assert!(matches!(splitting_direct(&dw, 2.0), Err(Error::Misuse(_))));
    }

    #[test]
    fn single_path_amplitude() {
        let sys = h2(0.05);
        let (plus, minus) = rotational_pair(&sys, 2.0);
        let path = find_transition_paths(&plus, &minus).unwrap().remove(0);
        let c = PathContribution { path, reflection: Complex64::new(0.0, 0.3), phase: 0.0 };
        let r = amplitude(vec![c.clone()], 0.05, Some(4.0));
        assert!((r.splitting().unwrap() - 2.0 * 0.05 * 0.3 / 4.0).abs() < 1e-16);
        assert!((r.eta - 0.3 / PI).abs() < 1e-16);
        assert!(amplitude(vec![c.clone()], 0.05, None).splitting().is_err());
        let mut d = c.clone();
        d.phase = PI;
        assert!(amplitude(vec![c, d], 0.05, Some(4.0)).flags.contains(&Flag::InterferenceZero));
    }

    #[test]
    fn reflection_scales_as_hbar_power() {
        for k in 1..=4 {
            let e = build(SystemId::Ex21, Params { k: Some(k), ..Default::default() }).unwrap();
            let a = e.circle().clone();
            let b = a.with_hbar(2.0 * a.hbar).unwrap();
            let (pa, ma) = rotational_pair(&a, 2.0);
            let (pb, mb) = rotational_pair(&b, 2.0);
            let ra = predict(&pa, &ma, PredictOptions::default()).unwrap();
            let rb = predict(&pb, &mb, PredictOptions::default()).unwrap();
            for (x, y) in ra.paths.iter().zip(&rb.paths) {
                let ratio = y.reflection.norm() / x.reflection.norm();
                assert!((ratio - 2f64.powi(k as i32)).abs() < 1e-12 * ratio);
            }
        }
    }

    #[test]
    fn envelope_doubles_as_hbar_power() {
        // between phase maxima of the interference factor the envelope scales as ħ^{k+1}
        for k in 1..=4u32 {
            let h1 = crate::analysis::phase_maximum_hbar(k, 0.04);
            let h2 = crate::analysis::phase_maximum_hbar(k, 2.0 * h1);
            let entry = |h: f64| build(SystemId::Ex22, Params { k: Some(k), hbar: Some(h), ..Default::default() }).unwrap();
            let factor = |h: f64| (crate::catalog::closed::alpha_k(k) * PI / h + k as f64 * PI / 2.0).sin().abs();
            let envelope = |h: f64| {
                let entry = entry(h);
                let e = entry.ebk_levels((1.9, 2.1)).unwrap()[0].energy;
                splitting_direct(entry.circle(), e).unwrap().delta.unwrap() * e.powi(k as i32 + 1) / factor(h)
            };
            let (d1, d2) = (envelope(h1), envelope(h2));
            assert!((factor(h1) - 1.0).abs() < 1e-12 && (factor(h2) - 1.0).abs() < 1e-12);
            let want = (h2 / h1).powi(k as i32 + 1);
            assert!((d2 / d1 - want).abs() < 1e-9 * want, "{k}: {} {want}", d2 / d1);
        }
    }

    #[test]
    fn ex31_offsets() {
        // below the separatrix the paths after the first carry phases 0, nπ, nπ
        let entry = build(SystemId::Ex31, Params::default()).unwrap();
        for lvl in entry.ebk_levels((0.3, 0.7)).unwrap().iter().step_by(5) {
            let r = entry.predict(lvl.energy, PredictOptions::default()).unwrap();
            assert_eq!(r.paths.len(), 4);
            let mut got: Vec<f64> = r.paths[1..].iter().map(|c| wrap_phase(c.phase).abs()).collect();
            got.sort_by(f64::total_cmp);
            let odd = if lvl.n % 2 == 0 { 0.0 } else { PI };
            let mut want = vec![0.0, odd, odd];
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-6, "n = {}: {got:?}", lvl.n);
            }
        }
    }

    #[test]
    fn ex31_above_separatrix_single_path() {
        let entry = build(SystemId::Ex31, Params::default()).unwrap();
        let r = entry.predict(2.0, PredictOptions::default()).unwrap();
        let want = entry.closed_form(2.0, None).unwrap().unwrap().amplitude;
        assert!((r.amplitude.norm() - want).abs() < 1e-8 * want);
    }

    #[test]
    fn ex32_amplitudes() {
        let zero = build(SystemId::Ex32, Params { p_c: Some(0.01), ..Default::default() }).unwrap();
        let e = zero.ebk_levels((0.4, 0.5)).unwrap()[0].energy;
        let r = zero.predict(e, PredictOptions::default()).unwrap();
        assert!(r.amplitude.norm() < 1e-12 * r.paths.iter().map(|c| c.reflection.norm()).fold(0.0, f64::max));

        let plain = build(SystemId::Ex32, Params::default()).unwrap();
        for lvl in plain.ebk_levels((0.3, 0.6)).unwrap().iter().step_by(4) {
            let eps = lvl.energy;
            let s = if lvl.n % 2 == 0 { 1.0 } else { -1.0 };
            let want = 0.02 / (2.0 * eps.sqrt() * (1.0 - eps).sqrt()) * (1.0 / (1.0 - eps) + s).abs();
            let got = plain.predict(eps, PredictOptions::default()).unwrap().amplitude.norm();
            assert!((got - want).abs() < 1e-8 * want, "{eps}: {got} {want}");
        }
    }

    #[test]
    fn fourier_expansion_examples() {
        let smooth = PiecewisePeriodicFunction::smooth(crate::model::SmoothFn::cos_power(2)).unwrap();
        assert_eq!(fourier_asymptotics(&smooth, 37, 3).unwrap(), Complex64::new(0.0, 0.0));

        let clipped = potentials::clipped_cos_power(1).unwrap();
        let term = |n: f64| {
            -(Complex64::from_polar(1.0, n * FRAC_PI_2) * clipped.jump_at(FRAC_PI_2, 1).unwrap()
                + Complex64::from_polar(1.0, n * 1.5 * PI) * clipped.jump_at(1.5 * PI, 1).unwrap())
                / (n * n)
        };
        // the two jumps cancel for odd n
        assert!(term(101.0).norm() < 1e-15);
        assert!(fourier_asymptotics(&clipped, 101, 1).unwrap().norm() < 1e-15);
        let got = fourier_asymptotics(&clipped, 100, 1).unwrap();
        assert!((got - term(100.0)).norm() < 1e-12 * term(100.0).norm());
        assert!((got.re + 2e-4).abs() < 1e-15);
        assert!(fourier_asymptotics(&clipped, 0, 1).is_err());
    }

    #[test]
    fn fourier_expansion_converges() {
        for f in [potentials::abs_cos().unwrap(), potentials::clipped_cos_power(1).unwrap()] {
            let mut last = f64::INFINITY;
            for n in [100i64, 200, 400] {
                // f̂(n) = 2π·conj(V_n) for real f
                let exact = f.fourier_coefficient(n).conj() * TWO_PI;
                let approx = fourier_asymptotics(&f, n, 1).unwrap();
                let rel = (approx - exact).norm() / exact.norm();
                assert!(rel < last);
                if n == 200 {
                    assert!(rel < 0.05);
                }
                last = rel;
            }
        }
    }

    #[test]
    fn phases_wrap() {
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
    }
}
