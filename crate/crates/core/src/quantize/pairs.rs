//! Near-degenerate pair extraction.

use serde::{Deserialize, Serialize};

use super::eigen::{Level, Sector};
use crate::error::{Error, Result};

pub const DEFAULT_GAP_RATIO: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdPair {
    /// Ordinal of the pair counted from the bottom of the spectrum.
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    pub delta: f64,
    /// `2Δε_n / (ε_{n+1} − ε_{n−1})`; absent without contiguous neighbour pairs.
    pub eta: Option<f64>,
    pub near_separatrix: bool,
    pub sectors: (Sector, Sector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<NdPair>,
    /// Set when the window holds fewer than three pairs.
    pub warning: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairOptions {
    pub window: (f64, f64),
    pub gap_ratio: f64,
    /// Energies of separatrices; pairs within `separatrix_band` are flagged.
    pub separatrices: Vec<f64>,
    pub separatrix_band: f64,
}

impl PairOptions {
    pub fn new(window: (f64, f64)) -> Self {
        Self { window, gap_ratio: DEFAULT_GAP_RATIO, separatrices: Vec::new(), separatrix_band: 0.0 }
    }
}

/// Pairs consecutive levels `(a, b)` with `b − a < gap_ratio · min(prev gap, next gap)`.
///
/// Pairing runs over the whole (filtered) spectrum so that `η` at the window
/// edges sees its neighbours; only pairs whose mean lies in the window are kept.
pub fn find_nd_pairs(levels: &[Level], opts: &PairOptions, filter: Option<&dyn Fn(&Level) -> bool>) -> Result<PairSet> {
    if !(opts.gap_ratio > 0.0 && opts.gap_ratio < 1.0) {
        return Err(Error::OutOfRange { name: "gap_ratio".into(), value: opts.gap_ratio, allowed: "(0, 1)".into() });
    }
    let kept: Vec<&Level> = levels.iter().filter(|l| filter.is_none_or(|f| f(l))).collect();
    for w in kept.windows(2) {
        if w[1].gap_to(w[0]) > 0.0 {
            return Err(Error::Misuse("levels must be sorted ascending".into()));
        }
    }
    let n = kept.len();
    let gap = |i: usize| kept[i].gap_to(kept[i + 1]);
    // (lower position, upper position)
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        let d = gap(i);
        let prev = if i > 0 { gap(i - 1) } else { f64::INFINITY };
        let next = if i + 2 < n { gap(i + 1) } else { f64::INFINITY };
        if d < opts.gap_ratio * prev.min(next) {
            raw.push((i, i + 1));
            i += 2;
        } else {
            i += 1;
        }
    }
    let mean = |(a, b): (usize, usize)| 0.5 * (kept[a].energy + kept[b].energy) + 0.5 * (kept[a].correction + kept[b].correction);
    let mut pairs = Vec::new();
    for (k, &(a, b)) in raw.iter().enumerate() {
        let m = mean((a, b));
        if m < opts.window.0 || m > opts.window.1 {
            continue;
        }
        let delta = kept[a].gap_to(kept[b]).max(0.0);
        let eta = if k > 0 && k + 1 < raw.len() && raw[k - 1].1 + 1 == a && b + 1 == raw[k + 1].0 {
            let spread = mean(raw[k + 1]) - mean(raw[k - 1]);
            (spread > 0.0).then(|| 2.0 * delta / spread)
        } else {
            None
        };
        let near = opts.separatrices.iter().any(|s| (m - s).abs() < opts.separatrix_band);
        pairs.push(NdPair {
            index: k,
            lower: kept[a].energy,
            upper: kept[b].energy,
            mean: m,
            delta,
            eta,
            near_separatrix: near,
            sectors: (kept[a].sector, kept[b].sector),
        });
    }
    let warning = (pairs.len() < 3).then_some(Error::InsufficientPairs { found: pairs.len() });
    Ok(PairSet { pairs, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(e: &[f64]) -> Vec<Level> {
        e.iter()
            .enumerate()
            .map(|(i, &energy)| Level { energy, correction: 0.0, sector: Sector::default(), p2: energy, dominant: i })
            .collect()
    }

    #[test]
    fn three_pairs() {
        let l = levels(&[0.0, 0.001, 1.0, 1.001, 2.0, 2.001]);
        let s = find_nd_pairs(&l, &PairOptions::new((-1.0, 3.0)), None).unwrap();
        assert_eq!(s.pairs.len(), 3);
        for p in &s.pairs {
            assert!((p.delta - 0.001).abs() < 1e-12);
        }
        assert!((s.pairs[1].eta.unwrap() - 0.001).abs() < 1e-12);
        assert!(s.pairs[0].eta.is_none());
        assert!(s.warning.is_none());
    }

    #[test]
    fn filter_and_warning() {
        let l = levels(&[0.0, 0.001, 1.0, 1.001, 2.0, 2.001]);
        let f = |l: &Level| l.p2 > 0.5;
        let s = find_nd_pairs(&l, &PairOptions::new((-1.0, 3.0)), Some(&f)).unwrap();
        assert_eq!(s.pairs.len(), 2);
        assert_eq!(s.warning, Some(Error::InsufficientPairs { found: 2 }));
    }

    #[test]
    fn rejects_bad_ratio() {
        let l = levels(&[0.0, 1.0]);
        let mut o = PairOptions::new((0.0, 1.0));
        o.gap_ratio = 1.5;
        assert!(find_nd_pairs(&l, &o, None).is_err());
    }

    #[test]
    fn evenly_spaced_levels_do_not_pair() {
        let l = levels(&[0.0, 1.0, 2.0, 3.0]);
        assert!(find_nd_pairs(&l, &PairOptions::new((-1.0, 4.0)), None).unwrap().pairs.is_empty());
    }
}
