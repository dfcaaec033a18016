use std::fmt;

use super::state::TruncatedState;
use super::{FockError, ModeId, Result};

/// Threshold-detector outcome on an ordered list of measured modes.
/// Bit `k` of the mask is the click bit of the `k`-th measured mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClickPattern(pub u16);

impl ClickPattern {
    pub fn clicked(self, slot: usize) -> bool {
        self.0 >> slot & 1 == 1
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

/// Joint distribution of threshold-detector outcomes, indexed by the
/// pattern mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ClickDistribution {
    modes: Vec<ModeId>,
    probabilities: Vec<f64>,
}

impl ClickDistribution {
    pub fn new(modes: Vec<ModeId>, probabilities: Vec<f64>) -> Self {
        assert_eq!(probabilities.len(), 1 << modes.len());
        Self { modes, probabilities }
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, pattern: ClickPattern) -> f64 {
        self.probabilities[pattern.0 as usize]
    }

    /// Click bits of `pattern` keyed by mode.
    pub fn bits(&self, pattern: ClickPattern) -> Vec<(ModeId, bool)> {
        self.modes
            .iter()
            .enumerate()
            .map(|(k, &m)| (m, pattern.clicked(k)))
            .collect()
    }

    /// Probability that `mode` clicks, marginalizing the others.
    pub fn marginal(&self, mode: ModeId) -> Result<f64> {
        let slot = self
            .modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(FockError::UnknownMode(mode))?;
        Ok(self
            .probabilities
            .iter()
            .enumerate()
            .filter(|(mask, _)| mask >> slot & 1 == 1)
            .map(|(_, p)| p)
            .sum())
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

impl fmt::Display for ClickDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (mask, p) in self.probabilities.iter().enumerate() {
            let bits: String = (0..self.modes.len())
                .map(|k| if mask >> k & 1 == 1 { '1' } else { '0' })
                .collect();
            writeln!(f, "{bits} {p:.6e}")?;
        }
        Ok(())
    }
}

impl TruncatedState {
    /// Outcome distribution of on/off detectors on `measured`; every other
    /// mode is traced out. The POVM per mode is `{|0><0|, 1 - |0><0|}`.
    pub fn click_distribution(&self, measured: &[ModeId]) -> Result<ClickDistribution> {
        if measured.len() > 16 {
            return Err(FockError::InvalidModeCount(measured.len()));
        }
        let positions = measured
            .iter()
            .map(|&m| self.position(m))
            .collect::<Result<Vec<_>>>()?;
        let mut probabilities = vec![0.0; 1 << measured.len()];
        for i in 0..self.dimension() {
            let mask = positions
                .iter()
                .enumerate()
                .filter(|(_, &p)| self.occupation(i, p) > 0)
                .fold(0usize, |acc, (k, _)| acc | 1 << k);
            probabilities[mask] += self.rho[(i, i)].re;
        }
        Ok(ClickDistribution::new(measured.to_vec(), probabilities))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn vacuum_never_clicks() {
        let s = TruncatedState::vacuum(&[ModeId(0), ModeId(1)], 2).unwrap();
        let d = s.click_distribution(&[ModeId(0), ModeId(1)]).unwrap();
        assert_eq!(d.probability(ClickPattern(0)), 1.0);
    }

    #[test]
    fn single_photon_always_clicks() {
        let s = TruncatedState::from_ket(&[ModeId(0)], 2, &[(vec![1], Complex64::new(1.0, 0.0))]).unwrap();
        let d = s.click_distribution(&[ModeId(0)]).unwrap();
        assert_eq!(d.probability(ClickPattern(1)), 1.0);
    }

    #[test]
    fn squeezed_vacuum_double_click() {
        // closed form: P(click, click) = 1 - P(0,0) = p for a perfectly
        // correlated pair source, truncated at cutoff 3
        let p: f64 = 0.01;
        let s = TruncatedState::vacuum(&[ModeId(0), ModeId(1)], 3)
            .unwrap()
            .apply_two_mode_squeeze(ModeId(0), ModeId(1), p.sqrt(), 0.0)
            .unwrap();
        let d = s.click_distribution(&[ModeId(0), ModeId(1)]).unwrap();
        let want = 1.0 - (1.0 - p);
        assert!((d.probability(ClickPattern(0b11)) - want).abs() < 1e-7);
        assert!(d.probability(ClickPattern(0b01)) < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_mode_is_an_error() {
        let s = TruncatedState::vacuum(&[ModeId(0)], 2).unwrap();
        assert_eq!(s.click_distribution(&[ModeId(3)]).unwrap_err(), FockError::UnknownMode(ModeId(3)));
    }
}
