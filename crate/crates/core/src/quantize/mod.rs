//! Exact quantum spectra in the momentum basis.

pub mod basis;
pub mod eigen;
pub mod matrix;
pub mod pairs;

pub use basis::{p2_expectation, BasisKind, MomentumBasis, DEFAULT_BASIS_CAP};
pub use eigen::{diagonalize, DiagonalizeOptions, Level, Parity, Reflection, Sector, SpectrumResult};
pub use matrix::{build_matrix, potential_coefficients, potential_fourier, spin_operator_matrix, FourierMethod};
pub use pairs::{find_nd_pairs, NdPair, PairOptions, PairSet, DEFAULT_GAP_RATIO};

use crate::error::{Error, Result};
use crate::model::{CircleSystem, SpinSystem};

/// Builds and diagonalizes a circle system.
pub fn solve(system: &CircleSystem, basis: &MomentumBasis, opts: &DiagonalizeOptions) -> Result<SpectrumResult> {
    diagonalize(&build_matrix(system, basis)?, basis, opts)
}

pub fn solve_spin(spin: &SpinSystem, opts: &DiagonalizeOptions) -> Result<SpectrumResult> {
    diagonalize(&spin_operator_matrix(spin)?, &MomentumBasis::spin(spin), opts)
}

/// Smallest basis, doubling from the kinetic cutoff, whose levels below
/// `e_max` move by less than `tolerance` when `N` doubles.
pub fn convergence_check(system: &CircleSystem, e_max: f64, tolerance: f64, cap: usize) -> Result<MomentumBasis> {
    if !(tolerance > 0.0) {
        return Err(Error::OutOfRange { name: "tolerance".into(), value: tolerance, allowed: "> 0".into() });
    }
    let opts = DiagonalizeOptions { keep_vectors: false, ..Default::default() };
    let mut basis = MomentumBasis::for_cutoff(system, e_max, 0.0, cap)?;
    let below = |s: &SpectrumResult| s.levels.iter().map(|l| l.energy).filter(|e| *e < e_max).collect::<Vec<_>>();
    let mut current = below(&solve(system, &basis, &opts)?);
    loop {
        let BasisKind::Circle { n_max } = basis.kind else { unreachable!() };
        let next = MomentumBasis::circle(2 * n_max, basis.hbar, basis.p_offset);
        if next.dimension() > cap {
            return Err(Error::BasisCap { requested: next.dimension(), cap });
        }
        let refined = solve(system, &next, &opts)?;
        let moved = current
            .iter()
            .zip(refined.levels.iter())
            .map(|(a, b)| (a - b.energy).abs())
            .fold(0.0, f64::max);
        if moved < tolerance {
            return Ok(basis);
        }
        basis = next;
        current = below(&refined);
    }
}

/// Spin systems are finite: the basis is always the full `2j + 1` multiplet.
pub fn convergence_check_spin(spin: &SpinSystem) -> MomentumBasis {
    MomentumBasis::spin(spin)
}
