//! Run configuration: command-line flags layered over an optional flat TOML file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nstorus::catalog::{build, CatalogEntry, Params, SystemId};
use nstorus::parallel::Execution;
use nstorus::quantize::{DEFAULT_BASIS_CAP, DEFAULT_GAP_RATIO};
use nstorus::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand. Each one may also be set in the
/// `--config` file under the same name with `-` replaced by `_`.
#[derive(Debug, Clone, Default, Args, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// Catalog system identifier (see `catalog list`).
    #[arg(long, global = true)]
    pub system: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub hbar: Option<f64>,
    /// Non-smoothness order of ex2.1 and ex2.2.
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Spin quantum number of ex3.3, an integer or half-integer.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub j: Option<f64>,
    /// Kink momentum of ex3.2.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub pc: Option<f64>,
    /// Kink momentum of ex3.2 in units of ħ.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub pc_over_hbar: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub emin: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub emax: Option<f64>,
    /// A pair is near-degenerate when its gap is below this fraction of both neighbouring gaps.
    #[arg(long, global = true)]
    pub gap_ratio: Option<f64>,
    /// Largest basis dimension allowed.
    #[arg(long, global = true)]
    pub basis_cap: Option<usize>,
    /// Kinetic energy kept above `--emax` in the plane-wave basis.
    #[arg(long, global = true)]
    pub margin: Option<f64>,
    /// Worker threads for scans: 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; metadata goes to `<out>.meta.json` next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a gnuplot script `<out>.gp` (needs `--out` and CSV).
    #[arg(long, global = true)]
    #[serde(default)]
    pub gnuplot: bool,
    /// Flat TOML file with defaults for any of these flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

impl Common {
    /// Flags win over the file named by `--config`.
    pub fn resolve(self) -> Result<Self> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let file = read_config(&path)?;
        Ok(Self {
            system: pick(&self.system, &file.system),
            hbar: pick(&self.hbar, &file.hbar),
            k: pick(&self.k, &file.k),
            j: pick(&self.j, &file.j),
            pc: pick(&self.pc, &file.pc),
            pc_over_hbar: pick(&self.pc_over_hbar, &file.pc_over_hbar),
            lambda: pick(&self.lambda, &file.lambda),
            emin: pick(&self.emin, &file.emin),
            emax: pick(&self.emax, &file.emax),
            gap_ratio: pick(&self.gap_ratio, &file.gap_ratio),
            basis_cap: pick(&self.basis_cap, &file.basis_cap),
            margin: pick(&self.margin, &file.margin),
            jobs: pick(&self.jobs, &file.jobs),
            format: pick(&self.format, &file.format),
            out: pick(&self.out, &file.out),
            gnuplot: self.gnuplot || file.gnuplot,
            config: Some(path),
        })
    }

    pub fn system_id(&self) -> Result<SystemId> {
        self.system.as_deref().ok_or_else(|| Error::Configuration("--system is required".into()))?.parse()
    }

    pub fn params(&self) -> Result<Params> {
        let id = self.system_id()?;
        let twice_j = match self.j {
            None => None,
            Some(j) => {
                let t = 2.0 * j;
                if !(t.fract() == 0.0 && t >= 1.0 && t <= u32::MAX as f64) {
                    return Err(Error::OutOfRange { name: "j".into(), value: j, allowed: "a positive multiple of 1/2".into() });
                }
                Some(t as u32)
            }
        };
        let p_c = match (self.pc, self.pc_over_hbar) {
            (Some(_), Some(_)) => return Err(Error::Configuration("give --pc or --pc-over-hbar, not both".into())),
            (Some(p), None) => Some(p),
            (None, Some(r)) => Some(r * self.hbar.unwrap_or(id.default_hbar())),
            (None, None) => None,
        };
        Ok(Params { hbar: self.hbar, k: self.k, p_c, lambda: self.lambda, twice_j })
    }

    pub fn entry(&self) -> Result<CatalogEntry> {
        build(self.system_id()?, self.params()?)
    }

    /// `(emin, emax)` with the entry's defaults filling gaps.
    pub fn window(&self, entry: &CatalogEntry) -> Result<(f64, f64)> {
        let w = (self.emin.unwrap_or(entry.default_window.0), self.emax.unwrap_or(entry.default_window.1));
        if !(w.0.is_finite() && w.1.is_finite() && w.1 > w.0) {
            return Err(Error::OutOfRange { name: "emax".into(), value: w.1, allowed: format!("finite and > emin = {}", w.0) });
        }
        Ok(w)
    }

    pub fn gap_ratio(&self) -> f64 {
        self.gap_ratio.unwrap_or(DEFAULT_GAP_RATIO)
    }

    pub fn basis_cap(&self) -> usize {
        self.basis_cap.unwrap_or(DEFAULT_BASIS_CAP)
    }

    pub fn exec(&self) -> Execution {
        Execution::from_jobs(self.jobs.unwrap_or(0))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

fn read_config(path: &Path) -> Result<Common> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Configuration(format!("config {}: {}", path.display(), e.message())))
}
