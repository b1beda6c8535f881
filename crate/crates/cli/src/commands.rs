//! Subcommand bodies. Each returns a table plus run metadata; writing is left to the caller.

use clap::{Subcommand, ValueEnum};
use nstorus::analysis::{
    compare, hbar_scan, parameter_scan, spectrum_table, CompareOptions, HbarScanOptions, PredictionSource, ScanAxis,
};
use nstorus::catalog::{build, list, CatalogEntry, Params};
use nstorus::model::Axis;
use nstorus::predictor::lattice::circle_lattice_sum;
use nstorus::predictor::{Flag, PredictOptions, PredictionReport};
use nstorus::quantize::Sector;
use nstorus::{Error, Result};

use crate::config::Common;
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact levels in the energy window.
    Spectrum,
    /// Near-degenerate pairs among the exact levels.
    Pairs,
    /// Semiclassical splitting at EBK levels of the window, or at `--energy`.
    Predict {
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
        /// One row per transition path instead of one per level.
        #[arg(long)]
        paths: bool,
        #[arg(long, value_enum, default_value_t = Source::Auto)]
        source: Source,
    },
    /// Numeric pairs next to their predictions.
    Compare {
        #[arg(long, value_enum, default_value_t = Source::Auto)]
        source: Source,
        /// Half-width of the flagged band around separatrices (default 5ħ^{2/3}).
        #[arg(long)]
        separatrix_band: Option<f64>,
    },
    /// Sweep ħ, λ or p_c.
    Scan {
        #[arg(value_enum)]
        axis: ScanKind,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Evenly spaced grid `start:stop:count`.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        /// Target pair energy for λ and p_c scans.
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
        /// Move each ħ to the nearest maximum of the ex2.2 interference factor.
        #[arg(long)]
        snap: bool,
    },
    /// Evaluate the lattice sum `W_k(x, y) = Σ_q e^{i2πqy} / (x + 2πq)^k`.
    Wsum {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long, allow_negative_numbers = true)]
        y: f64,
    },
    /// Catalog entries.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum CatalogAction {
    List,
    /// Formulas, loci, regimes and parameter ranges of one entry as JSON.
    Describe { id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Auto,
    Engine,
    Closed,
}

impl From<Source> for PredictionSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Auto => PredictionSource::Auto,
            Source::Engine => PredictionSource::Engine,
            Source::Closed => PredictionSource::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanKind {
    Hbar,
    Lambda,
    Pc,
}

/// What a command produced.
pub enum Output {
    Table { table: Table, plot: Option<Plot> },
    /// Pre-rendered JSON document.
    Document(serde_json::Value),
}

pub struct Plot {
    pub x: &'static str,
    pub y: Vec<&'static str>,
    pub log: bool,
}

#[derive(Default)]
pub struct Meta {
    pub basis_dimension: Option<usize>,
    pub warnings: Vec<String>,
    pub extra: serde_json::Map<String, serde_json::Value>,
}

fn table(table: Table, x: &'static str, y: &[&'static str], log: bool) -> Output {
    Output::Table { table, plot: Some(Plot { x, y: y.to_vec(), log }) }
}

fn compare_options(c: &Common, entry: &CatalogEntry) -> Result<CompareOptions> {
    Ok(CompareOptions {
        window: Some(c.window(entry)?),
        gap_ratio: c.gap_ratio(),
        basis_cap: c.basis_cap(),
        margin: c.margin,
        exec: c.exec(),
        ..Default::default()
    })
}

fn sector(s: Sector) -> Cell {
    let t = s.to_string();
    if t.is_empty() {
        Cell::Empty
    } else {
        Cell::Text(t)
    }
}

fn flags(f: &[Flag]) -> Cell {
    if f.is_empty() {
        return Cell::Empty;
    }
    let names: Vec<&str> = f
        .iter()
        .map(|f| match f {
            Flag::InterferenceZero => "interference-zero",
            Flag::BelowPowerLawFloor => "below-power-law-floor",
        })
        .collect();
    Cell::Text(names.join(";"))
}

fn bool_cell(b: bool) -> Cell {
    Cell::Int(b as i64)
}

pub fn run(cmd: &Command, c: &Common, meta: &mut Meta) -> Result<Output> {
    match cmd {
        Command::Spectrum => spectrum(c, meta),
        Command::Pairs => pairs(c, meta),
        Command::Predict { energy, paths, source } => predict(c, *energy, *paths, *source),
        Command::Compare { source, separatrix_band } => compare_cmd(c, *source, *separatrix_band, meta),
        Command::Scan { axis, values, range, energy, snap } => {
            let grid = grid(values, range.as_deref())?;
            match axis {
                ScanKind::Hbar => scan_hbar(c, grid, *snap, energy.is_some(), meta),
                ScanKind::Lambda => scan_param(c, ScanAxis::Lambda, grid, *energy, *snap),
                ScanKind::Pc => scan_param(c, ScanAxis::Pc, grid, *energy, *snap),
            }
        }
        Command::Wsum { x, y } => wsum(c, *x, *y),
        Command::Catalog { action } => catalog(c, action),
    }
}

fn spectrum(c: &Common, meta: &mut Meta) -> Result<Output> {
    let entry = c.entry()?;
    // without --emin the listing starts at the bottom of the classical energy range
    let floor = entry.circle().potential.min_value();
    let bottom = entry.regimes.iter().map(|r| r.energy.0).fold(entry.default_window.0.min(floor), f64::min);
    let c = &Common { emin: c.emin.or(Some(bottom)), ..c.clone() };
    let t = spectrum_table(&entry, &compare_options(c, &entry)?)?;
    meta.basis_dimension = Some(t.basis_dimension);
    let mut out = Table::new("spectrum", &["index", "energy", "correction", "sector", "p2", "dominant", "kept"]);
    for (i, l) in t.levels.iter().enumerate() {
        out.push(vec![
            i.into(),
            l.energy.into(),
            l.correction.into(),
            sector(l.sector),
            l.p2.into(),
            l.dominant.into(),
            bool_cell(entry.keeps(l)),
        ]);
    }
    Ok(table(out, "index", &["energy"], false))
}

fn pairs(c: &Common, meta: &mut Meta) -> Result<Output> {
    let entry = c.entry()?;
    let t = spectrum_table(&entry, &compare_options(c, &entry)?)?;
    meta.basis_dimension = Some(t.basis_dimension);
    if let Some(w) = &t.pairs.warning {
        meta.warnings.push(w.to_string());
    }
    let mut out = Table::new(
        "pairs",
        &["index", "lower", "upper", "mean", "delta", "eta", "near_separatrix", "sector_lower", "sector_upper"],
    );
    for p in &t.pairs.pairs {
        out.push(vec![
            p.index.into(),
            p.lower.into(),
            p.upper.into(),
            p.mean.into(),
            p.delta.into(),
            Cell::opt(p.eta),
            bool_cell(p.near_separatrix),
            sector(p.sectors.0),
            sector(p.sectors.1),
        ]);
    }
    Ok(table(out, "mean", &["delta"], true))
}

/// EBK levels of every regime overlapping the window, lowest first.
fn ebk_energies(entry: &CatalogEntry, window: (f64, f64)) -> Result<Vec<(i64, f64)>> {
    let mut out = Vec::new();
    for r in &entry.regimes {
        let pad = |v: f64| 1e-9 * v.abs().max(1.0);
        let lo = window.0.max(r.energy.0 + pad(r.energy.0));
        let hi = window.1.min(r.energy.1 - pad(r.energy.1));
        if hi > lo {
            out.extend(entry.ebk_levels((lo, hi))?.into_iter().map(|l| (l.n, l.energy)));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

const PREDICT_COLUMNS: &[&str] = &[
    "n",
    "energy",
    "amplitude_re",
    "amplitude_im",
    "delta",
    "eta",
    "period",
    "paths",
    "closed_delta",
    "closed_eta",
    "flags",
    "note",
];

const PATH_COLUMNS: &[&str] = &[
    "n",
    "energy",
    "path",
    "axis",
    "locus",
    "order",
    "jump",
    "length",
    "x_start",
    "p_start",
    "x_end",
    "p_end",
    "reflection_re",
    "reflection_im",
    "phase",
];

fn predict(c: &Common, energy: Option<f64>, by_path: bool, source: Source) -> Result<Output> {
    let entry = c.entry()?;
    let levels = match energy {
        Some(e) => vec![(entry.quantum_number(e)?, e)],
        None => ebk_energies(&entry, c.window(&entry)?)?,
    };
    let opts = PredictOptions::default();
    let reports: Vec<(i64, f64, Result<PredictionReport>)> =
        levels.into_iter().map(|(n, e)| (n, e, entry.predict(e, opts))).collect();
    if by_path {
        let mut out = Table::new("predict-paths", PATH_COLUMNS);
        for (n, e, r) in &reports {
            let r = match r {
                Ok(r) => r,
                Err(err) if energy.is_some() => return Err(err.clone()),
                Err(_) => continue,
            };
            for (i, p) in r.paths.iter().enumerate() {
                out.push(vec![
                    (*n).into(),
                    (*e).into(),
                    i.into(),
                    match p.path.axis() {
                        Axis::X => "x",
                        Axis::P => "p",
                    }
                    .into(),
                    p.path.locus.location.into(),
                    (p.path.order as usize).into(),
                    p.path.jump.into(),
                    p.path.length.into(),
                    p.path.start.x.into(),
                    p.path.start.p.into(),
                    p.path.end.x.into(),
                    p.path.end.p.into(),
                    p.reflection.re.into(),
                    p.reflection.im.into(),
                    p.phase.into(),
                ]);
            }
        }
        return Ok(Output::Table { table: out, plot: None });
    }
    let mut out = Table::new("predict", PREDICT_COLUMNS);
    for (n, e, r) in reports {
        let closed = match source {
            Source::Engine => Ok(None),
            _ => entry.closed_form(e, Some(n)),
        };
        let mut row = vec![n.into(), e.into()];
        let mut flag_cell = Cell::Empty;
        match r {
            Ok(r) => {
                flag_cell = flags(&r.flags);
                row.extend([
                    r.amplitude.re.into(),
                    r.amplitude.im.into(),
                    Cell::opt(r.delta),
                    r.eta.into(),
                    Cell::opt(r.period),
                    r.paths.len().into(),
                ]);
            }
            Err(err) if energy.is_some() && source != Source::Closed => return Err(err),
            Err(_) => row.extend(std::iter::repeat_n(Cell::Empty, 6)),
        }
        let mut note = Cell::Empty;
        match closed {
            Ok(Some(cf)) => row.extend([Cell::opt(cf.delta), cf.eta.into()]),
            Ok(None) if source == Source::Closed => {
                return Err(Error::Configuration(format!("{} has no closed form for these parameters", entry.id)))
            }
            Ok(None) => row.extend([Cell::Empty, Cell::Empty]),
            Err(err) => {
                note = Cell::Text(err.to_string());
                row.extend([Cell::Empty, Cell::Empty]);
            }
        }
        row.push(flag_cell);
        row.push(note);
        out.push(row);
    }
    Ok(table(out, "energy", &["delta"], true))
}

const COMPARE_COLUMNS: &[&str] = &[
    "energy",
    "delta_numeric",
    "delta_predicted",
    "eta_numeric",
    "eta_predicted",
    "ratio",
    "n",
    "ebk_energy",
    "coherence",
    "near_separatrix",
    "flags",
    "note",
];

fn compare_cmd(c: &Common, source: Source, band: Option<f64>, meta: &mut Meta) -> Result<Output> {
    let entry = c.entry()?;
    let mut opts = compare_options(c, &entry)?;
    opts.source = source.into();
    opts.separatrix_band = band;
    let cmp = compare(&entry, &opts)?;
    meta.basis_dimension = Some(cmp.basis_dimension);
    if let Some(w) = &cmp.warning {
        meta.warnings.push(w.to_string());
    }
    let mut out = Table::new("compare", COMPARE_COLUMNS);
    for r in &cmp.rows {
        out.push(vec![
            r.energy.into(),
            r.delta_numeric.into(),
            Cell::opt(r.delta_predicted),
            Cell::opt(r.eta_numeric),
            Cell::opt(r.eta_predicted),
            Cell::opt(r.ratio),
            r.n.map_or(Cell::Empty, Cell::Int),
            Cell::opt(r.ebk_energy),
            Cell::opt(r.coherence),
            bool_cell(r.near_separatrix),
            flags(&r.flags),
            r.note.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    Ok(table(out, "energy", &["delta_numeric", "delta_predicted"], true))
}

fn grid(values: &[f64], range: Option<&str>) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Configuration(format!("--range {}: {why}", range.unwrap_or("")));
    match (values.is_empty(), range) {
        (false, Some(_)) => Err(Error::Configuration("give --values or --range, not both".into())),
        (false, None) => Ok(values.to_vec()),
        (true, None) => Err(Error::Configuration("a scan needs --values or --range".into())),
        (true, Some(r)) => {
            let parts: Vec<&str> = r.split(':').collect();
            let [a, b, n] = parts[..] else { return Err(bad("expected start:stop:count")) };
            let a: f64 = a.trim().parse().map_err(|_| bad("start is not a number"))?;
            let b: f64 = b.trim().parse().map_err(|_| bad("stop is not a number"))?;
            let n: usize = n.trim().parse().map_err(|_| bad("count is not an integer"))?;
            match n {
                0 => Err(bad("count must be positive")),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
            }
        }
    }
}

fn scan_hbar(c: &Common, hbars: Vec<f64>, snap: bool, has_energy: bool, meta: &mut Meta) -> Result<Output> {
    if has_energy {
        return Err(Error::Configuration("--energy applies to lambda and pc scans".into()));
    }
    if c.hbar.is_some() {
        return Err(Error::Configuration("--hbar conflicts with an hbar scan grid".into()));
    }
    let id = c.system_id()?;
    let params = Params { hbar: None, ..c.params()? };
    let mut opts = HbarScanOptions::new(hbars);
    opts.snap_to_phase_maximum = snap;
    if c.emin.is_some() || c.emax.is_some() {
        opts.fit_window = (c.emin.unwrap_or(opts.fit_window.0), c.emax.unwrap_or(opts.fit_window.1));
        opts.reference_energy = 0.5 * (opts.fit_window.0 + opts.fit_window.1);
    }
    opts.compare.gap_ratio = c.gap_ratio();
    opts.compare.basis_cap = c.basis_cap();
    opts.compare.margin = c.margin;
    let scan = hbar_scan(id, params, &opts, c.exec())?;
    meta.extra.insert("fit_window".into(), serde_json::json!(opts.fit_window));
    meta.extra.insert("reference_energy".into(), opts.reference_energy.into());
    let mut out = Table::new(
        "scan-hbar",
        &["requested", "hbar", "pairs", "envelope_numeric", "envelope_predicted", "slope_numeric", "slope_predicted"],
    );
    for r in &scan.rows {
        out.push(vec![
            r.requested.into(),
            r.hbar.into(),
            r.pairs.into(),
            Cell::opt(r.envelope_numeric),
            Cell::opt(r.envelope_predicted),
            Cell::opt(scan.slope_numeric),
            Cell::opt(scan.slope_predicted),
        ]);
    }
    Ok(table(out, "hbar", &["envelope_numeric", "envelope_predicted"], true))
}

fn scan_param(c: &Common, axis: ScanAxis, grid: Vec<f64>, energy: Option<f64>, snap: bool) -> Result<Output> {
    if snap {
        return Err(Error::Configuration("--snap applies to hbar scans".into()));
    }
    let energy = energy.ok_or_else(|| Error::Configuration("lambda and pc scans need --energy".into()))?;
    let id = c.system_id()?;
    let base = c.params()?;
    if axis == ScanAxis::Pc && base.p_c.is_some() || axis == ScanAxis::Lambda && base.lambda.is_some() {
        return Err(Error::Configuration("the scanned parameter cannot also be fixed by a flag".into()));
    }
    let window = match (c.emin, c.emax) {
        (None, None) => None,
        (a, b) => Some((a.unwrap_or(energy - 0.1), b.unwrap_or(energy + 0.1))),
    };
    let opts = CompareOptions { window, gap_ratio: c.gap_ratio(), basis_cap: c.basis_cap(), margin: c.margin, ..Default::default() };
    let rows = parameter_scan(id, base, axis, &grid, energy, &opts, c.exec())?;
    let (name, col): (&'static str, &'static str) = match axis {
        ScanAxis::Lambda => ("scan-lambda", "lambda"),
        ScanAxis::Pc => ("scan-pc", "p_c"),
    };
    let mut out = Table::new(name, &[col, "energy", "amplitude_predicted", "delta_predicted", "delta_numeric", "note"]);
    for r in &rows {
        out.push(vec![
            r.value.into(),
            Cell::opt(r.energy),
            Cell::opt(r.amplitude_predicted),
            Cell::opt(r.delta_predicted),
            Cell::opt(r.delta_numeric),
            r.note.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    Ok(table(out, col, &["delta_numeric", "delta_predicted"], false))
}

fn wsum(c: &Common, x: f64, y: f64) -> Result<Output> {
    let k = c.k.ok_or_else(|| Error::Configuration("wsum needs --k".into()))?;
    let w = circle_lattice_sum(k, x, y)?;
    let mut out = Table::new("wsum", &["k", "x", "y", "re", "im", "abs"]);
    out.push(vec![(k as usize).into(), x.into(), y.into(), w.re.into(), w.im.into(), w.norm().into()]);
    Ok(Output::Table { table: out, plot: None })
}

fn catalog(c: &Common, action: &CatalogAction) -> Result<Output> {
    match action {
        CatalogAction::List => {
            let mut out = Table::new("catalog", &["id", "hamiltonian", "default_hbar"]);
            for (id, h) in list() {
                out.push(vec![id.name().into(), h.into(), id.default_hbar().into()]);
            }
            Ok(Output::Table { table: out, plot: None })
        }
        CatalogAction::Describe { id } => {
            if c.system.as_deref().is_some_and(|s| s != id) {
                return Err(Error::Configuration(format!("--system {} disagrees with {id}", c.system.as_deref().unwrap_or(""))));
            }
            let c = Common { system: Some(id.clone()), ..c.clone() };
            let d = build(c.system_id()?, c.params()?)?.describe()?;
            serde_json::to_value(&d).map(Output::Document).map_err(crate::table::io_err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(grid(&[], Some("0:1:5")).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid(&[0.1, 0.2], None).unwrap(), vec![0.1, 0.2]);
        assert!(grid(&[], None).is_err());
        assert!(grid(&[1.0], Some("0:1:2")).is_err());
        assert!(grid(&[], Some("0:1")).is_err());
    }
}
