use super::ModelError;

/// Number of joint detector outcomes per trial.
pub const OUTCOMES: usize = 16;

const B1: usize = 1;
const B2: usize = 1 << 1;
const R1: usize = 1 << 2;
const R2: usize = 1 << 3;

/// Joint click distribution over the four detector windows of one trial.
///
/// Outcome index bits: 0 = blue window on detector 1, 1 = blue on detector 2,
/// 2 = red on detector 1, 3 = red on detector 2.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    probabilities: [f64; OUTCOMES],
}

impl OutcomeDistribution {
    pub fn new(probabilities: [f64; OUTCOMES]) -> Result<Self, ModelError> {
        let total: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| !(*p >= -1e-15)) || (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::Unnormalized(total));
        }
        Ok(Self {
            probabilities: probabilities.map(|p| p.max(0.0)),
        })
    }

    /// Everything on the no-click outcome.
    pub fn silent() -> Self {
        let mut p = [0.0; OUTCOMES];
        p[0] = 1.0;
        Self { probabilities: p }
    }

    /// Independent blue and red windows, each given over `(d1, d2)` masks.
    pub fn from_windows(blue: [f64; 4], red: [f64; 4]) -> Result<Self, ModelError> {
        let mut p = [0.0; OUTCOMES];
        for (b, pb) in blue.iter().enumerate() {
            for (r, pr) in red.iter().enumerate() {
                p[b | r << 2] = pb * pr;
            }
        }
        Self::new(p)
    }

    pub fn outcome_index(blue: [bool; 2], red: [bool; 2]) -> usize {
        (blue[0] as usize) * B1 + (blue[1] as usize) * B2 + (red[0] as usize) * R1 + (red[1] as usize) * R2
    }

    pub fn decode(index: usize) -> ([bool; 2], [bool; 2]) {
        (
            [index & B1 != 0, index & B2 != 0],
            [index & R1 != 0, index & R2 != 0],
        )
    }

    pub fn probabilities(&self) -> &[f64; OUTCOMES] {
        &self.probabilities
    }

    pub fn probability(&self, blue: [bool; 2], red: [bool; 2]) -> f64 {
        self.probabilities[Self::outcome_index(blue, red)]
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    fn marginal(&self, bit: usize) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Click probability of detector `k` (0 or 1) in the blue window.
    pub fn blue_single(&self, k: usize) -> f64 {
        self.marginal(if k == 0 { B1 } else { B2 })
    }

    /// Click probability of detector `k` (0 or 1) in the red window.
    pub fn red_single(&self, k: usize) -> f64 {
        self.marginal(if k == 0 { R1 } else { R2 })
    }

    /// Probability of at least one blue click.
    pub fn blue_any(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| i & (B1 | B2) != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability of at least one red click.
    pub fn red_any(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| i & (R1 | R2) != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability of at least one click in both windows.
    pub fn both_any(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| i & (B1 | B2) != 0 && i & (R1 | R2) != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability of exactly one blue click.
    pub fn herald_probability(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & (B1 | B2)).count_ones() == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// `[[P11, P12], [P21, P22]]`: exactly one blue click on detector i and
    /// exactly one red click on detector j.
    pub fn coincidence_probabilities(&self) -> [[f64; 2]; 2] {
        let blue = [B1, B2];
        let red = [R1, R2];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.probabilities[blue[i] | red[j]];
            }
        }
        out
    }

    /// Post-selected correlation coefficient of the exact distribution.
    pub fn correlation(&self) -> Result<f64, ModelError> {
        let [[n11, n12], [n21, n22]] = self.coincidence_probabilities();
        // grouped so that relabeling detectors negates the result exactly
        let same = n11 + n22;
        let diff = n12 + n21;
        let total = same + diff;
        if total <= 0.0 {
            return Err(ModelError::NoCoincidences);
        }
        Ok((same - diff) / total)
    }

    /// Relabels the two red-window detectors.
    pub fn swap_red_detectors(&self) -> Self {
        let mut p = [0.0; OUTCOMES];
        for (i, v) in self.probabilities.iter().enumerate() {
            let swapped = (i & (B1 | B2)) | (i & R1) << 1 | (i & R2) >> 1;
            p[swapped] = *v;
        }
        Self { probabilities: p }
    }

    /// ORs independent background clicks into each window, `beta` indexed
    /// like the outcome bits.
    pub fn with_background(&self, beta: [f64; 4]) -> Self {
        let mut p = self.probabilities;
        for (k, b) in beta.iter().enumerate() {
            let bit = 1 << k;
            for mask in 0..OUTCOMES {
                if mask & bit == 0 {
                    let moved = p[mask] * b;
                    p[mask] -= moved;
                    p[mask | bit] += moved;
                }
            }
        }
        Self { probabilities: p }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode() {
        for i in 0..OUTCOMES {
            let (b, r) = OutcomeDistribution::decode(i);
            assert_eq!(OutcomeDistribution::outcome_index(b, r), i);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(OutcomeDistribution::new([0.1; OUTCOMES]).is_err());
    }

    #[test]
    fn background_is_an_independent_or() {
        let d = OutcomeDistribution::silent().with_background([0.1, 0.0, 0.2, 0.0]);
        assert!((d.probability([true, false], [true, false]) - 0.02).abs() < 1e-15);
        assert!((d.probability([false, false], [false, false]) - 0.72).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swapping_red_labels_flips_correlation() {
        let mut p = [0.0; OUTCOMES];
        p[0] = 0.9;
        p[B1 | R1] = 0.05;
        p[B1 | R2] = 0.03;
        p[B2 | R2] = 0.02;
        let d = OutcomeDistribution::new(p).unwrap();
        let e = d.correlation().unwrap();
        assert_eq!(d.swap_red_detectors().correlation().unwrap(), -e);
    }
}
