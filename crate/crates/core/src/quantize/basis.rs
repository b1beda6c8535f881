use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CircleSystem, SpinSystem};

/// Default hard cap on the number of basis states.
pub const DEFAULT_BASIS_CAP: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BasisKind {
    /// Plane waves `r = −N..=N`, `p_r = rħ + p₀`.
    Circle { n_max: usize },
    /// `|j, m⟩`, `m = −j..=j`; momenta are `mħ + p₀`.
    Spin { twice_j: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumBasis {
    pub kind: BasisKind,
    pub hbar: f64,
    pub p_offset: f64,
}

impl MomentumBasis {
    pub fn circle(n_max: usize, hbar: f64, p_offset: f64) -> Self {
        Self { kind: BasisKind::Circle { n_max }, hbar, p_offset }
    }

    pub fn spin(spin: &SpinSystem) -> Self {
        Self { kind: BasisKind::Spin { twice_j: spin.twice_j }, hbar: spin.hbar, p_offset: spin.p_offset() }
    }

    /// Smallest `N` with `E_k(±Nħ + p₀) > ε_max + margin`.
    pub fn for_cutoff(system: &CircleSystem, e_max: f64, margin: f64, cap: usize) -> Result<Self> {
        let level = e_max + margin;
        let h = system.hbar;
        let ok = |n: usize| {
            let p = n as f64 * h;
            system.kinetic.value(p + system.p_offset) > level && system.kinetic.value(-p + system.p_offset) > level
        };
        let mut hi = 1usize;
        while !ok(hi) {
            hi *= 2;
            if 2 * hi + 1 > 4 * cap.max(1) {
                return Err(Error::BasisCap { requested: 2 * hi + 1, cap });
            }
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let basis = Self::circle(hi, h, system.p_offset);
        if basis.dimension() > cap {
            return Err(Error::BasisCap { requested: basis.dimension(), cap });
        }
        Ok(basis)
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            BasisKind::Circle { n_max } => 2 * n_max + 1,
            BasisKind::Spin { twice_j } => twice_j as usize + 1,
        }
    }

    /// Index label of position `i`: `r` for circles, `m` for spins.
    pub fn label(&self, i: usize) -> f64 {
        match self.kind {
            BasisKind::Circle { n_max } => i as f64 - n_max as f64,
            BasisKind::Spin { twice_j } => i as f64 - twice_j as f64 / 2.0,
        }
    }

    pub fn momentum(&self, i: usize) -> f64 {
        self.label(i) * self.hbar + self.p_offset
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.dimension()).map(|i| self.momentum(i)).collect()
    }
}

/// `Σ_r |c_r|² p_r²`.
pub fn p2_expectation(state: &[num_complex::Complex64], basis: &MomentumBasis) -> f64 {
    state.iter().enumerate().map(|(i, c)| c.norm_sqr() * basis.momentum(i).powi(2)).sum()
}
