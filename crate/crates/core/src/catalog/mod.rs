//! Built-in systems: Hamiltonians, torus classes, Maslov data and closed forms.

pub mod closed;
pub mod potentials;

pub use closed::{alpha_k, spin_matrix, ClosedForm};

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{ebk_levels, EbkLevel, Torus, TorusClass};
use crate::error::{Error, Result};
use crate::model::{
    spin_to_circle, CircleSystem, KineticForm, NonSmoothLocus, PiecewisePeriodicFunction, Region, SpinBlock, SpinMonomial,
    SpinSystem,
};
use crate::predictor::{predict, PredictOptions, PredictionReport};
use crate::quantize::{
    build_matrix, diagonalize, DiagonalizeOptions, Level, MomentumBasis, SpectrumResult, DEFAULT_BASIS_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemId {
    #[serde(rename = "free")]
    Free,
    H1,
    H2,
    H3,
    H4,
    #[serde(rename = "ex2.1")]
    Ex21,
    #[serde(rename = "ex2.2")]
    Ex22,
    #[serde(rename = "ex3.1")]
    Ex31,
    #[serde(rename = "ex3.2")]
    Ex32,
    #[serde(rename = "ex3.3")]
    Ex33,
    #[serde(rename = "lambda")]
    Lambda,
}

impl SystemId {
    pub const ALL: [SystemId; 11] = [
        SystemId::Free,
        SystemId::H1,
        SystemId::H2,
        SystemId::H3,
        SystemId::H4,
        SystemId::Ex21,
        SystemId::Ex22,
        SystemId::Ex31,
        SystemId::Ex32,
        SystemId::Ex33,
        SystemId::Lambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemId::Free => "free",
            SystemId::H1 => "H1",
            SystemId::H2 => "H2",
            SystemId::H3 => "H3",
            SystemId::H4 => "H4",
            SystemId::Ex21 => "ex2.1",
            SystemId::Ex22 => "ex2.2",
            SystemId::Ex31 => "ex3.1",
            SystemId::Ex32 => "ex3.2",
            SystemId::Ex33 => "ex3.3",
            SystemId::Lambda => "lambda",
        }
    }

    pub fn hamiltonian(self) -> &'static str {
        match self {
            SystemId::Free => "p^2/2",
            SystemId::H1 => "p^2/2 + cos^2 x",
            SystemId::H2 => "p^2/2 + |cos x|",
            SystemId::H3 => "|p| + cos^2 x",
            SystemId::H4 => "|p| + |cos x|",
            SystemId::Ex21 => "p^2/2 + max(cos x, 0)^k",
            SystemId::Ex22 => "|p| + max(cos x, 0)^k",
            SystemId::Ex31 => "(p^2 - 1)^2 + 1 - (x/pi)^2, |x| <= pi",
            SystemId::Ex32 => "|p - p_c| + cos^2 x",
            SystemId::Ex33 => "J1^2 - J2^2 + J3^2 [J3 >= 0]",
            SystemId::Lambda => "p^2/2 + cos x + lambda |sin x|",
        }
    }

    fn closed_form_text(self) -> Option<&'static str> {
        match self {
            SystemId::Ex21 => Some("eta = k! hbar^k / (2^k pi (2e)^(k/2+1)) |sin(sqrt(2e) pi/hbar + k pi/2)|, e > 1"),
            SystemId::Ex22 => {
                Some("delta = k! hbar^(k+1) / (2^k pi e^(k+1)) |sin(alpha_k pi/hbar + k pi/2)|, e > 1")
            }
            SystemId::Ex31 => Some(
                "|A| = hbar/(4 pi sqrt e) |(1+sqrt e)^-3/2 + (1-sqrt e)^-3/2 + (-1)^n 4/((1+sqrt(1-e))(1-e)^1/4)|, e < 1; \
                 |A| = hbar/(4 pi sqrt e (1+sqrt e)^3/2), e > 1",
            ),
            SystemId::Ex32 => Some(
                "|A| = hbar/(sqrt e sqrt(1-e)) |W2(2xc, y) + W2(2pi-2xc, y) + (-1)^n 2 W2(pi, y)|, xc = acos(sqrt e), y = p_c/hbar",
            ),
            SystemId::Ex33 => Some(
                "integer j: |A| = |cos phi| / (2 (j+1/2)^2 (1-xi)^2); half-integer j: \
                 |A| = |(3+xi)/(sqrt2 (1-xi)^3/2) sin phi + 1/2| / (4 (j+1/2)^2 sqrt(1-xi^2)); \
                 phi = pi (j+1/2) (1 - sqrt((1-xi)/2))",
            ),
            _ => None,
        }
    }

    fn takes(self, param: &str) -> bool {
        match param {
            "hbar" => self != SystemId::Ex33,
            "k" => matches!(self, SystemId::Ex21 | SystemId::Ex22),
            "p_c" => self == SystemId::Ex32,
            "lambda" => !matches!(self, SystemId::Free | SystemId::Ex33),
            "j" => self == SystemId::Ex33,
            _ => false,
        }
    }

    pub fn default_hbar(self) -> f64 {
        match self {
            SystemId::Free => 1.0,
            SystemId::Ex21 | SystemId::Lambda => 0.05,
            SystemId::Ex22 => 0.04,
            _ => 0.02,
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        SystemId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownSystem(t.to_string()))
    }
}

/// Entry parameters; `None` selects the entry default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    pub hbar: Option<f64>,
    pub k: Option<u32>,
    pub p_c: Option<f64>,
    /// `V → λV`, or the `|sin x|` weight for the `lambda` entry.
    pub lambda: Option<f64>,
    /// `2j` for the spin entry.
    pub twice_j: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub enum Model {
    Circle(CircleSystem),
    /// Quantized in `|j, m⟩`; predicted on the circle image.
    Spin { spin: SpinSystem, circle: CircleSystem },
}

/// Drop levels with `⟨p²⟩ < below` whose energy lies in `(band.0, band.1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2Filter {
    pub below: f64,
    pub band: (f64, f64),
}

impl P2Filter {
    pub fn keeps(&self, level: &Level) -> bool {
        !(level.energy > self.band.0 && level.energy <= self.band.1 && level.p2 < self.below)
    }
}

/// Energy interval on which a pair of congruent torus classes exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub name: &'static str,
    pub energy: (f64, f64),
    pub plus: TorusClass,
    pub minus: TorusClass,
    pub maslov: u32,
    pub p2_filter: Option<P2Filter>,
}

impl Regime {
    pub fn contains(&self, e: f64) -> bool {
        e > self.energy.0 && e < self.energy.1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub value: f64,
    pub allowed: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Description {
    pub id: SystemId,
    pub hamiltonian: &'static str,
    pub parameters: Vec<ParamSpec>,
    pub loci: Vec<NonSmoothLocus>,
    pub regimes: Vec<Regime>,
    pub separatrices: Vec<f64>,
    pub default_window: (f64, f64),
    pub closed_form: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: SystemId,
    pub params: Params,
    pub model: Model,
    pub regimes: Vec<Regime>,
    pub separatrices: Vec<f64>,
    pub default_window: (f64, f64),
}

fn out_of_range(name: &str, value: f64, allowed: &str) -> Error {
    Error::OutOfRange { name: name.into(), value, allowed: allowed.into() }
}

fn rotational(lo: f64, p2_filter: Option<P2Filter>) -> Regime {
    Regime {
        name: "rotational",
        energy: (lo, f64::INFINITY),
        plus: TorusClass::Rotational { join: 0.0, limit: f64::INFINITY },
        minus: TorusClass::Rotational { join: 0.0, limit: f64::NEG_INFINITY },
        maslov: 0,
        p2_filter,
    }
}

fn twin_pockets(energy: (f64, f64), join: f64, limits: (f64, f64)) -> Regime {
    let pocket = |x_center| TorusClass::Pocket { x_center, join, upper_limit: limits.1, lower_limit: limits.0 };
    Regime { name: "pockets", energy, plus: pocket(FRAC_PI_2), minus: pocket(1.5 * PI), maslov: 2, p2_filter: None }
}

/// Build a catalog entry after validating its parameters.
pub fn build(id: SystemId, params: Params) -> Result<CatalogEntry> {
    for (name, given) in [
        ("hbar", params.hbar.is_some()),
        ("k", params.k.is_some()),
        ("p_c", params.p_c.is_some()),
        ("lambda", params.lambda.is_some()),
        ("j", params.twice_j.is_some()),
    ] {
        if given && !id.takes(name) {
            return Err(Error::Configuration(format!("{id} takes no parameter {name}")));
        }
    }
    let hbar = params.hbar.unwrap_or(id.default_hbar());
    let hbar_max = if id == SystemId::Free { 10.0 } else { 0.5 };
    if id.takes("hbar") && !(1e-3..=hbar_max).contains(&hbar) {
        return Err(out_of_range("hbar", hbar, if id == SystemId::Free { "[1e-3, 10]" } else { "[1e-3, 0.5]" }));
    }
    let k = params.k.unwrap_or(1);
    if id.takes("k") && !(1..=4).contains(&k) {
        return Err(out_of_range("k", k as f64, "[1, 4]"));
    }
    let lambda = params.lambda.unwrap_or(if id == SystemId::Lambda { 0.5 } else { 1.0 });
    if id == SystemId::Lambda {
        if !(-10.0..=10.0).contains(&lambda) {
            return Err(out_of_range("lambda", lambda, "[-10, 10]"));
        }
    } else if id.takes("lambda") && !(0.0..=10.0).contains(&lambda) {
        return Err(out_of_range("lambda", lambda, "[0, 10]"));
    }
    let p_c = params.p_c.unwrap_or(0.0);
    if id.takes("p_c") && !(-1.0..=1.0).contains(&p_c) {
        return Err(out_of_range("p_c", p_c, "[-1, 1]"));
    }
    let twice_j = params.twice_j.unwrap_or(200);
    if id.takes("j") && !(1..=800).contains(&twice_j) {
        return Err(out_of_range("j", twice_j as f64 / 2.0, "[1/2, 400] in steps of 1/2"));
    }

    let scaled = |v: PiecewisePeriodicFunction| -> PiecewisePeriodicFunction {
        if lambda == 0.0 {
            PiecewisePeriodicFunction::zero()
        } else if lambda == 1.0 {
            v
        } else {
            v.scaled(lambda)
        }
    };
    let quadratic = KineticForm::quadratic;
    let abs = || KineticForm::abs(0.0);

    let (model, resolved) = match id {
        SystemId::Ex33 => {
            let hbar = 1.0 / (twice_j as f64 / 2.0 + 0.5);
            let j2 = |c| SpinMonomial::new(c, [0, 0, 2]);
            let a = SpinMonomial::new(1.0, [2, 0, 0]);
            let b = SpinMonomial::new(-1.0, [0, 2, 0]);
            let spin = SpinSystem::new(
                twice_j,
                hbar,
                vec![
                    SpinBlock { region: Region::NonNegative, terms: vec![a.clone(), b.clone(), j2(1.0)] },
                    SpinBlock { region: Region::Negative, terms: vec![a, b] },
                ],
            )?;
            let circle = spin_to_circle(&spin)?;
            (Model::Spin { spin, circle }, Params { twice_j: Some(twice_j), hbar: Some(hbar), ..Default::default() })
        }
        _ => {
            let (kinetic, potential) = match id {
                SystemId::Free => (quadratic(), PiecewisePeriodicFunction::zero()),
                SystemId::H1 => (quadratic(), scaled(potentials::cos_squared()?)),
                SystemId::H2 => (quadratic(), scaled(potentials::abs_cos()?)),
                SystemId::H3 => (abs(), scaled(potentials::cos_squared()?)),
                SystemId::H4 => (abs(), scaled(potentials::abs_cos()?)),
                SystemId::Ex21 => (quadratic(), scaled(potentials::clipped_cos_power(k)?)),
                SystemId::Ex22 => (abs(), scaled(potentials::clipped_cos_power(k)?)),
                SystemId::Ex31 => (KineticForm::double_well(), scaled(potentials::inverted_parabola()?)),
                SystemId::Ex32 => (KineticForm::abs(p_c), scaled(potentials::cos_squared()?)),
                SystemId::Lambda => (quadratic(), potentials::cos_plus_abs_sin(lambda)?),
                SystemId::Ex33 => unreachable!(),
            };
            let sys = CircleSystem::separable(kinetic, potential, hbar)?;
            let mut p = Params { hbar: Some(hbar), ..Default::default() };
            if id.takes("k") {
                p.k = Some(k);
            }
            if id.takes("p_c") {
                p.p_c = Some(p_c);
            }
            if id.takes("lambda") {
                p.lambda = Some(lambda);
            }
            (Model::Circle(sys), p)
        }
    };

    let (vmin, vmax) = match &model {
        Model::Circle(s) => {
            if id == SystemId::Lambda && lambda > 0.0 {
                (s.potential.min_value(), (1.0 + lambda * lambda).sqrt())
            } else if id == SystemId::Lambda {
                (s.potential.min_value(), 1.0)
            } else {
                (s.potential.min_value(), s.potential.max_value())
            }
        }
        Model::Spin { .. } => (-1.0, 0.0),
    };

    let inf = f64::INFINITY;
    let (regimes, separatrices, window) = match id {
        SystemId::Free => (vec![rotational(0.0, None)], vec![0.0], (0.0, 10.0)),
        SystemId::H1 | SystemId::H2 | SystemId::H3 | SystemId::H4 => {
            let mut r = vec![rotational(vmax, None)];
            if vmax > vmin {
                r.push(twin_pockets((vmin, vmax), 0.0, (-inf, inf)));
            }
            (r, vec![vmax], (1.2 * vmax.max(1e-3), 3.0 * vmax.max(1e-3)))
        }
        SystemId::Ex21 | SystemId::Ex22 => (vec![rotational(vmax, None)], vec![vmax], (1.5, 3.0)),
        SystemId::Lambda => (vec![rotational(vmax, None)], vec![vmax], (vmax + 0.2, vmax + 2.0)),
        SystemId::Ex31 => {
            let pocket = Regime {
                name: "off-center pockets",
                energy: (vmin, vmax),
                plus: TorusClass::Pocket { x_center: PI, join: 1.0, upper_limit: inf, lower_limit: 0.0 },
                minus: TorusClass::Pocket { x_center: PI, join: -1.0, upper_limit: 0.0, lower_limit: -inf },
                maslov: 2,
                p2_filter: None,
            };
            let rot = Regime {
                name: "rotational",
                energy: (vmax, inf),
                plus: TorusClass::Rotational { join: 1.0, limit: inf },
                minus: TorusClass::Rotational { join: -1.0, limit: -inf },
                maslov: 0,
                p2_filter: Some(P2Filter { below: 1.0, band: (1.0 + vmin, 1.0 + vmax) }),
            };
            (vec![pocket, rot], vec![vmax], (0.2, 2.5))
        }
        SystemId::Ex32 => (vec![twin_pockets((vmin, vmax), p_c, (-inf, inf))], vec![vmax], (0.2, 0.8)),
        SystemId::Ex33 => {
            let Model::Spin { spin, .. } = &model else { unreachable!() };
            let (p0, r) = (spin.p_offset(), spin.radius());
            (vec![twin_pockets((-r * r, 0.0), p0, (p0 - r, p0 + r))], vec![0.0], (-0.8, -0.2))
        }
    };

    Ok(CatalogEntry { id, params: resolved, model, regimes, separatrices, default_window: window })
}

/// Parse an identifier and build.
pub fn build_named(name: &str, params: Params) -> Result<CatalogEntry> {
    build(name.parse()?, params)
}

pub fn list() -> Vec<(SystemId, &'static str)> {
    SystemId::ALL.iter().map(|&id| (id, id.hamiltonian())).collect()
}

/// Settings for [`CatalogEntry::spectrum`].
#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Levels are converged up to `window.1`; refinement runs on the window.
    pub window: (f64, f64),
    pub basis_cap: usize,
    /// Kinetic energy above `window.1` kept in the basis; `None` uses `max(2, window.1)`.
    pub margin: Option<f64>,
    pub keep_vectors: bool,
}

impl SpectrumOptions {
    pub fn new(window: (f64, f64)) -> Self {
        Self { window, basis_cap: DEFAULT_BASIS_CAP, margin: None, keep_vectors: false }
    }
}

impl CatalogEntry {
    pub fn hbar(&self) -> f64 {
        self.circle().hbar
    }

    /// The classical system (the circle image for spins).
    pub fn circle(&self) -> &CircleSystem {
        match &self.model {
            Model::Circle(s) => s,
            Model::Spin { circle, .. } => circle,
        }
    }

    pub fn spin(&self) -> Option<&SpinSystem> {
        match &self.model {
            Model::Spin { spin, .. } => Some(spin),
            Model::Circle(_) => None,
        }
    }

    pub fn regime_at(&self, energy: f64) -> Option<&Regime> {
        self.regimes.iter().find(|r| r.contains(energy))
    }

    fn regime_or_err(&self, energy: f64) -> Result<&Regime> {
        self.regime_at(energy).ok_or_else(|| Error::NoTorus { energy, class: format!("any regime of {}", self.id) })
    }

    /// Levels with `⟨p²⟩` filtering applied where the regime asks for it.
    pub fn keeps(&self, level: &Level) -> bool {
        self.regimes.iter().filter_map(|r| r.p2_filter).all(|f| f.keeps(level))
    }

    pub fn has_p2_filter(&self) -> bool {
        self.regimes.iter().any(|r| r.p2_filter.is_some())
    }

    pub fn predict(&self, energy: f64, opts: PredictOptions) -> Result<PredictionReport> {
        let r = self.regime_or_err(energy)?;
        let sys = self.circle();
        let plus = Torus::new(sys, energy, r.plus)?;
        let minus = Torus::new(sys, energy, r.minus)?;
        predict(&plus, &minus, opts)
    }

    /// EBK quantum number of the `O⁺` torus at `energy`.
    pub fn quantum_number(&self, energy: f64) -> Result<i64> {
        let r = self.regime_or_err(energy)?;
        let s = Torus::new(self.circle(), energy, r.plus)?.action()?;
        Ok(crate::classical::quantum_number(s, r.maslov, self.hbar()))
    }

    pub fn ebk_levels(&self, range: (f64, f64)) -> Result<Vec<EbkLevel>> {
        let r = self.regime_or_err(0.5 * (range.0 + range.1))?;
        if !(r.contains(range.0) && r.contains(range.1)) {
            return Err(Error::OutOfRange {
                name: "energy range".into(),
                value: range.1,
                allowed: format!("inside ({}, {})", r.energy.0, r.energy.1),
            });
        }
        ebk_levels(self.circle(), r.plus, r.maslov, range)
    }

    /// Closed-form prediction; `Ok(None)` when the entry has none for these parameters.
    pub fn closed_form(&self, energy: f64, parity: Option<i64>) -> Result<Option<ClosedForm>> {
        closed::evaluate(self, energy, parity)
    }

    /// Exact spectrum; spins use the `|j, m⟩` matrix elements directly.
    pub fn spectrum(&self, opts: &SpectrumOptions) -> Result<SpectrumResult> {
        let dopts = DiagonalizeOptions { refine_window: Some(opts.window), keep_vectors: opts.keep_vectors, ..Default::default() };
        match &self.model {
            Model::Spin { spin, .. } => {
                let basis = MomentumBasis::spin(spin);
                if basis.dimension() > opts.basis_cap {
                    return Err(Error::BasisCap { requested: basis.dimension(), cap: opts.basis_cap });
                }
                diagonalize(&spin_matrix(spin.twice_j, spin.hbar), &basis, &dopts)
            }
            Model::Circle(sys) => {
                let margin = opts.margin.unwrap_or(opts.window.1.max(2.0));
                let basis = MomentumBasis::for_cutoff(sys, opts.window.1, margin, opts.basis_cap)?;
                diagonalize(&build_matrix(sys, &basis)?, &basis, &dopts)
            }
        }
    }

    pub fn describe(&self) -> Result<Description> {
        let mut parameters = vec![ParamSpec {
            name: "hbar",
            value: self.hbar(),
            allowed: match self.id {
                SystemId::Free => "[1e-3, 10]",
                SystemId::Ex33 => "1/(j + 1/2), fixed by j",
                _ => "[1e-3, 0.5]",
            },
        }];
        if let Some(k) = self.params.k {
            parameters.push(ParamSpec { name: "k", value: k as f64, allowed: "integer in [1, 4]" });
        }
        if let Some(p) = self.params.p_c {
            parameters.push(ParamSpec { name: "p_c", value: p, allowed: "[-1, 1]" });
        }
        if let Some(l) = self.params.lambda {
            let allowed = if self.id == SystemId::Lambda { "[-10, 10]" } else { "[0, 10] (scales V)" };
            parameters.push(ParamSpec { name: "lambda", value: l, allowed });
        }
        if let Some(tj) = self.params.twice_j {
            parameters.push(ParamSpec { name: "j", value: tj as f64 / 2.0, allowed: "[1/2, 400] in steps of 1/2" });
        }
        Ok(Description {
            id: self.id,
            hamiltonian: self.id.hamiltonian(),
            parameters,
            loci: self.circle().loci()?,
            regimes: self.regimes.clone(),
            separatrices: self.separatrices.clone(),
            default_window: self.default_window,
            closed_form: self.id.closed_form_text(),
        })
    }
}
