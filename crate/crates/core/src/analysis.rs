//! Numeric-versus-predicted comparisons and parameter scans over catalog entries.

use serde::{Deserialize, Serialize};

use crate::catalog::{build, CatalogEntry, Params, SpectrumOptions, SystemId};
use crate::classical::{ebk_levels, Torus};
use crate::error::{Error, Result};
use crate::numerics::TWO_PI;
use crate::parallel::{map_ordered, Execution};
use crate::predictor::{Flag, PredictOptions};
use crate::quantize::{find_nd_pairs, Level, PairOptions, PairSet, DEFAULT_BASIS_CAP, DEFAULT_GAP_RATIO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PredictionSource {
    /// Closed form when the entry has one, the path-sum engine otherwise.
    #[default]
    Auto,
    Engine,
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    /// `None` uses the entry's default window.
    pub window: Option<(f64, f64)>,
    pub gap_ratio: f64,
    pub basis_cap: usize,
    pub margin: Option<f64>,
    /// Half-width of the flagged band around separatrices; `None` is `5ħ^{2/3}`.
    pub separatrix_band: Option<f64>,
    pub source: PredictionSource,
    pub predict: PredictOptions,
    pub exec: Execution,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            window: None,
            gap_ratio: DEFAULT_GAP_RATIO,
            basis_cap: DEFAULT_BASIS_CAP,
            margin: None,
            separatrix_band: None,
            source: PredictionSource::Auto,
            predict: PredictOptions::default(),
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    /// Mean energy of the numeric pair.
    pub energy: f64,
    /// EBK quantum number of the pair.
    pub n: Option<i64>,
    /// Energy at which the prediction was evaluated.
    pub ebk_energy: Option<f64>,
    pub delta_numeric: f64,
    pub eta_numeric: Option<f64>,
    pub delta_predicted: Option<f64>,
    pub eta_predicted: Option<f64>,
    /// `η/η⁽⁰⁾`, or `Δε/Δε⁽⁰⁾` when `η` is unavailable.
    pub ratio: Option<f64>,
    /// `|Σ r_j e^{iφ_j}| / Σ|r_j|` from the engine; small values mark interference zeros.
    pub coherence: Option<f64>,
    pub near_separatrix: bool,
    pub flags: Vec<Flag>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub warning: Option<Error>,
    pub basis_dimension: usize,
}

/// Levels in a window with their pairing.
#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub levels: Vec<Level>,
    pub pairs: PairSet,
    pub basis_dimension: usize,
}

fn window_of(entry: &CatalogEntry, opts: &CompareOptions) -> Result<(f64, f64)> {
    let w = opts.window.unwrap_or(entry.default_window);
    if !(w.1 > w.0) || !w.0.is_finite() || !w.1.is_finite() {
        return Err(Error::OutOfRange { name: "energy window".into(), value: w.1, allowed: format!("finite and > {}", w.0) });
    }
    Ok(w)
}

/// Spectrum, filtered as the entry prescribes, and its near-degenerate pairs.
pub fn spectrum_table(entry: &CatalogEntry, opts: &CompareOptions) -> Result<SpectrumTable> {
    let window = window_of(entry, opts)?;
    let sopts = SpectrumOptions { window, basis_cap: opts.basis_cap, margin: opts.margin, keep_vectors: false };
    let spec = entry.spectrum(&sopts)?;
    let band = opts.separatrix_band.unwrap_or(5.0 * entry.hbar().powf(2.0 / 3.0));
    let popts = PairOptions { window, gap_ratio: opts.gap_ratio, separatrices: entry.separatrices.clone(), separatrix_band: band };
    let keep = |l: &Level| entry.keeps(l);
    let pairs = if entry.has_p2_filter() {
        find_nd_pairs(&spec.levels, &popts, Some(&keep))?
    } else {
        find_nd_pairs(&spec.levels, &popts, None)?
    };
    // levels sitting on an edge, such as the free ground state at 0, stay in
    let tol = 1e-12 * window.0.abs().max(window.1.abs()).max(1.0);
    let levels = spec.levels.into_iter().filter(|l| l.energy >= window.0 - tol && l.energy <= window.1 + tol).collect();
    Ok(SpectrumTable { levels, pairs, basis_dimension: spec.basis.dimension() })
}

/// EBK energy of quantum number `n` near `energy`.
fn ebk_energy(entry: &CatalogEntry, energy: f64, n: i64) -> Result<f64> {
    let r = entry.regime_at(energy).ok_or_else(|| Error::NoTorus { energy, class: "regime".into() })?;
    let t = Torus::new(entry.circle(), energy, r.plus)?.period()?;
    let spacing = TWO_PI * entry.hbar() / t;
    let lo = (energy - 0.6 * spacing).max(r.energy.0 + 1e-9 * spacing);
    let hi = (energy + 0.6 * spacing).min(r.energy.1 - 1e-9 * spacing);
    let levels = ebk_levels(entry.circle(), r.plus, r.maslov, (lo, hi))?;
    levels
        .iter()
        .find(|l| l.n == n)
        .map(|l| l.energy)
        .ok_or_else(|| Error::NoTorus { energy, class: format!("EBK level n = {n}") })
}

struct Predicted {
    n: i64,
    energy: f64,
    amplitude: f64,
    period: f64,
    closed_delta: Option<f64>,
    coherence: Option<f64>,
    flags: Vec<Flag>,
}

fn predict_at(entry: &CatalogEntry, energy: f64, opts: &CompareOptions) -> Result<Predicted> {
    let n = entry.quantum_number(energy)?;
    let e = ebk_energy(entry, energy, n)?;
    let report = entry.predict(e, opts.predict);
    let closed = match opts.source {
        PredictionSource::Engine => None,
        _ => entry.closed_form(e, Some(n))?,
    };
    if opts.source == PredictionSource::ClosedForm && closed.is_none() {
        return Err(Error::Configuration(format!("{} has no closed form here", entry.id)));
    }
    let (coherence, flags, engine_amp, period) = match &report {
        Ok(r) => {
            let total: f64 = r.paths.iter().map(|c| c.reflection.norm()).sum();
            let coh = (total > 0.0).then(|| r.amplitude.norm() / total);
            (coh, r.flags.clone(), Some(r.amplitude.norm()), r.period)
        }
        Err(_) => (None, Vec::new(), None, None),
    };
    let amplitude = match (closed, engine_amp) {
        (Some(c), _) => c.amplitude,
        (None, Some(a)) => a,
        (None, None) => return Err(report.expect_err("engine failed")),
    };
    let period = match period {
        Some(t) => t,
        None => {
            let r = entry.regime_at(e).ok_or_else(|| Error::NoTorus { energy: e, class: "regime".into() })?;
            Torus::new(entry.circle(), e, r.plus)?.period()?
        }
    };
    Ok(Predicted { n, energy: e, amplitude, period, closed_delta: closed.and_then(|c| c.delta), coherence, flags })
}

/// One row per near-degenerate pair in the window.
pub fn compare(entry: &CatalogEntry, opts: &CompareOptions) -> Result<Comparison> {
    let table = spectrum_table(entry, opts)?;
    let h = entry.hbar();
    let rows = map_ordered(&table.pairs.pairs, opts.exec, |p| {
        let mut row = CompareRow {
            energy: p.mean,
            n: None,
            ebk_energy: None,
            delta_numeric: p.delta,
            eta_numeric: p.eta,
            delta_predicted: None,
            eta_predicted: None,
            ratio: None,
            coherence: None,
            near_separatrix: p.near_separatrix,
            flags: Vec::new(),
            note: None,
        };
        match predict_at(entry, p.mean, opts) {
            Ok(pr) => {
                let delta = pr.closed_delta.unwrap_or(2.0 * h * pr.amplitude / pr.period);
                let eta = pr.amplitude / std::f64::consts::PI;
                row.n = Some(pr.n);
                row.ebk_energy = Some(pr.energy);
                row.delta_predicted = Some(delta);
                row.eta_predicted = Some(eta);
                row.ratio = match p.eta {
                    Some(en) if eta > 0.0 => Some(en / eta),
                    None if delta > 0.0 => Some(p.delta / delta),
                    _ => None,
                };
                row.coherence = pr.coherence;
                row.flags = pr.flags;
            }
            Err(e) => row.note = Some(e.to_string()),
        }
        row
    })?;
    Ok(Comparison { rows, warning: table.pairs.warning, basis_dimension: table.basis_dimension })
}

/// Leading non-smoothness order `k` of an entry.
pub fn leading_order(entry: &CatalogEntry) -> Result<u32> {
    entry
        .circle()
        .loci()?
        .iter()
        .map(|l| l.order)
        .min()
        .ok_or_else(|| Error::Misuse(format!("{} is smooth; its splittings have no power law", entry.id)))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Misuse("slope fit needs equally long columns".into()));
    }
    if x.len() < 3 {
        return Err(Error::OutOfRange { name: "grid points".into(), value: x.len() as f64, allowed: ">= 3".into() });
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Misuse("slope fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Nearest `ħ = α_k / (m + ½ − k/2)`, where `|sin(α_kπ/ħ + kπ/2)| = 1`.
pub fn phase_maximum_hbar(k: u32, hbar: f64) -> f64 {
    let a = crate::catalog::alpha_k(k);
    let shift = 0.5 - 0.5 * k as f64;
    let m = (a / hbar - shift).round().max(1.0 - shift.floor());
    a / (m + shift)
}

#[derive(Debug, Clone)]
pub struct HbarScanOptions {
    pub hbars: Vec<f64>,
    /// Move each `ħ` to the nearest maximum of the interference factor (ex2.2 only).
    pub snap_to_phase_maximum: bool,
    /// Pairs with mean energy here enter the envelope.
    pub fit_window: (f64, f64),
    /// Envelope values are rescaled by `(ε/ε_ref)^{k+1}` before taking the median.
    pub reference_energy: f64,
    pub compare: CompareOptions,
}

impl HbarScanOptions {
    pub fn new(hbars: Vec<f64>) -> Self {
        Self {
            hbars,
            snap_to_phase_maximum: false,
            fit_window: (2.0, 3.0),
            reference_energy: 2.5,
            compare: CompareOptions { exec: Execution::Sequential, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbarScanRow {
    pub requested: f64,
    pub hbar: f64,
    pub pairs: usize,
    pub envelope_numeric: Option<f64>,
    pub envelope_predicted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbarScan {
    pub rows: Vec<HbarScanRow>,
    pub slope_numeric: Option<f64>,
    pub slope_predicted: Option<f64>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Median rescaled splitting per `ħ` and the fitted power of `ħ`.
pub fn hbar_scan(id: SystemId, params: Params, opts: &HbarScanOptions, exec: Execution) -> Result<HbarScan> {
    if opts.hbars.len() < 3 {
        return Err(Error::OutOfRange { name: "hbar grid".into(), value: opts.hbars.len() as f64, allowed: ">= 3 points".into() });
    }
    if opts.snap_to_phase_maximum && id != SystemId::Ex22 {
        return Err(Error::Configuration("phase-maximum snapping is defined for ex2.2 only".into()));
    }
    let rows = map_ordered(&opts.hbars, exec, |&requested| -> Result<HbarScanRow> {
        let k = params.k.unwrap_or(1);
        let hbar = if opts.snap_to_phase_maximum { phase_maximum_hbar(k, requested) } else { requested };
        let entry = build(id, Params { hbar: Some(hbar), ..params })?;
        let order = leading_order(&entry)? as i32;
        let mut copts = opts.compare.clone();
        let (a, b) = opts.fit_window;
        copts.window = Some((a - 0.2 * (b - a), b + 0.2 * (b - a)));
        let cmp = compare(&entry, &copts)?;
        let inside: Vec<&CompareRow> = cmp.rows.iter().filter(|r| r.energy >= a && r.energy <= b).collect();
        let scale = |r: &CompareRow| (r.energy / opts.reference_energy).powi(order + 1);
        Ok(HbarScanRow {
            requested,
            hbar,
            pairs: inside.len(),
            envelope_numeric: median(inside.iter().map(|r| r.delta_numeric * scale(r)).collect()),
            envelope_predicted: median(inside.iter().filter_map(|r| r.delta_predicted.map(|d| d * scale(r))).collect()),
        })
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let fit = |pick: fn(&HbarScanRow) -> Option<f64>| -> Option<f64> {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| pick(r).map(|v| (r.hbar, v))).collect();
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        loglog_slope(&x, &y).ok()
    };
    Ok(HbarScan { slope_numeric: fit(|r| r.envelope_numeric), slope_predicted: fit(|r| r.envelope_predicted), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanAxis {
    Lambda,
    /// `p_c` of ex3.2.
    Pc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamScanRow {
    pub value: f64,
    /// Mean energy of the pair closest to the target energy.
    pub energy: Option<f64>,
    pub amplitude_predicted: Option<f64>,
    pub delta_predicted: Option<f64>,
    pub delta_numeric: Option<f64>,
    pub note: Option<String>,
}

/// Pair closest to `energy` for each parameter value on `grid`.
pub fn parameter_scan(
    id: SystemId,
    base: Params,
    axis: ScanAxis,
    grid: &[f64],
    energy: f64,
    opts: &CompareOptions,
    exec: Execution,
) -> Result<Vec<ParamScanRow>> {
    let half = opts.window.map_or(0.1, |(a, b)| 0.5 * (b - a));
    let inner = CompareOptions { window: Some((energy - half, energy + half)), exec: Execution::Sequential, ..opts.clone() };
    let rows = map_ordered(grid, exec, |&value| {
        let params = match axis {
            ScanAxis::Lambda => Params { lambda: Some(value), ..base },
            ScanAxis::Pc => Params { p_c: Some(value), ..base },
        };
        let mut row =
            ParamScanRow { value, energy: None, amplitude_predicted: None, delta_predicted: None, delta_numeric: None, note: None };
        let result = build(id, params).and_then(|entry| compare(&entry, &inner).map(|c| (entry, c)));
        match result {
            Ok((entry, c)) => {
                if let Some(best) = c.rows.iter().min_by(|a, b| (a.energy - energy).abs().total_cmp(&(b.energy - energy).abs())) {
                    row.energy = Some(best.energy);
                    row.delta_numeric = Some(best.delta_numeric);
                    row.delta_predicted = best.delta_predicted;
                    row.amplitude_predicted = best.eta_predicted.map(|e| e * std::f64::consts::PI);
                    row.note = best.note.clone();
                } else {
                    row.note = Some(format!("no near-degenerate pair of {} near energy {energy}", entry.id));
                }
            }
            Err(e) => row.note = Some(e.to_string()),
        }
        row
    })?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.08, 0.04, 0.02, 0.01];
        let y: Vec<f64> = x.iter().map(|h: &f64| 3.0 * h.powi(3)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(loglog_slope(&x[..2], &y[..2]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn phase_maxima() {
        for k in 1..=4 {
            for h in [0.08, 0.04, 0.02, 0.01] {
                let s = phase_maximum_hbar(k, h);
                let a = crate::catalog::alpha_k(k);
                assert!(((a * std::f64::consts::PI / s + k as f64 * std::f64::consts::FRAC_PI_2).sin().abs() - 1.0).abs() < 1e-9);
                assert!((s / h - 1.0).abs() < 0.6);
            }
        }
    }
}
