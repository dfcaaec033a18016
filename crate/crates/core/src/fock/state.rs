use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FockError, Result, EIGENVALUE_FLOOR};

pub const MIN_CUTOFF: usize = 2;
pub const MAX_CUTOFF: usize = 4;
pub const MAX_MODES: usize = 8;
pub const MAX_DIMENSION: usize = 4096;

/// Label of a bosonic mode inside a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeId(pub u8);

/// Density operator over `modes`, each truncated at `cutoff` excitations.
///
/// Basis index layout: the first mode in `modes` is the most significant
/// digit in base `cutoff + 1`.
#[derive(Clone, Debug)]
pub struct TruncatedState {
    pub(super) modes: Vec<ModeId>,
    pub(super) cutoff: usize,
    pub(super) rho: DMatrix<Complex64>,
    pub(super) truncation_loss: f64,
}

fn checked_dimension(n_modes: usize, cutoff: usize) -> Result<usize> {
    if !(MIN_CUTOFF..=MAX_CUTOFF).contains(&cutoff) {
        return Err(FockError::InvalidCutoff(cutoff));
    }
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(FockError::InvalidModeCount(n_modes));
    }
    let dimension = (cutoff + 1).pow(n_modes as u32);
    if dimension > MAX_DIMENSION {
        return Err(FockError::DimensionOverflow { dimension });
    }
    Ok(dimension)
}

fn check_unique(modes: &[ModeId]) -> Result<()> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(FockError::DuplicateMode(*m));
        }
    }
    Ok(())
}

impl TruncatedState {
    /// Pure vacuum `|0...0><0...0|` on the given register.
    pub fn vacuum(modes: &[ModeId], cutoff: usize) -> Result<Self> {
        let dim = checked_dimension(modes.len(), cutoff)?;
        check_unique(modes)?;
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(Self {
            modes: modes.to_vec(),
            cutoff,
            rho,
            truncation_loss: 0.0,
        })
    }

    /// Builds a state from a pure ket given as `(occupations, amplitude)` pairs.
    /// The ket is normalized before the projector is formed.
    pub fn from_ket(modes: &[ModeId], cutoff: usize, ket: &[(Vec<usize>, Complex64)]) -> Result<Self> {
        let mut state = Self::vacuum(modes, cutoff)?;
        let dim = state.dimension();
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        for (occ, amp) in ket {
            if occ.len() != modes.len() || occ.iter().any(|&n| n > cutoff) {
                return Err(FockError::Inconsistent(format!(
                    "occupation vector {occ:?} does not fit the register"
                )));
            }
            psi[state.encode(occ)] += *amp;
        }
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(FockError::Inconsistent("zero ket".into()));
        }
        for (i, a) in psi.iter().enumerate() {
            for (j, b) in psi.iter().enumerate() {
                state.rho[(i, j)] = a * b.conj() / (norm * norm);
            }
        }
        Ok(state)
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dimension(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// Total population discarded by projections back onto the cutoff,
    /// accumulated over the history of this state.
    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub(super) fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub(super) fn position(&self, mode: ModeId) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(FockError::UnknownMode(mode))
    }

    pub(super) fn encode(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * self.levels() + n)
    }

    pub(super) fn occupation(&self, index: usize, position: usize) -> usize {
        let shift = self.modes.len() - 1 - position;
        (index / self.levels().pow(shift as u32)) % self.levels()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        (0..self.modes.len()).map(|p| self.occupation(index, p)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability of the joint occupation `occ` (all modes, register order).
    pub fn population(&self, occ: &[usize]) -> f64 {
        self.rho[(self.encode(occ), self.encode(occ))].re
    }

    /// Marginal occupation distribution of one mode.
    pub fn mode_populations(&self, mode: ModeId) -> Result<Vec<f64>> {
        let pos = self.position(mode)?;
        let mut out = vec![0.0; self.levels()];
        for i in 0..self.dimension() {
            out[self.occupation(i, pos)] += self.rho[(i, i)].re;
        }
        Ok(out)
    }

    pub fn mean_number(&self, mode: ModeId) -> Result<f64> {
        Ok(self
            .mode_populations(mode)?
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum())
    }

    pub fn total_number(&self) -> f64 {
        (0..self.dimension())
            .map(|i| self.decode(i).iter().sum::<usize>() as f64 * self.rho[(i, i)].re)
            .sum()
    }

    /// Largest deviation from Hermiticity over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dimension();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks the density-operator invariants: unit trace, Hermiticity and
    /// eigenvalues above [`EIGENVALUE_FLOOR`].
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(FockError::Inconsistent(format!("trace {tr}")));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(FockError::Inconsistent(format!("hermiticity error {herm:e}")));
        }
        let min = self.min_eigenvalue();
        if min < EIGENVALUE_FLOOR {
            return Err(FockError::Inconsistent(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Traces out `mode`, returning the state of the remaining register.
    pub fn partial_trace(&self, mode: ModeId) -> Result<Self> {
        let pos = self.position(mode)?;
        if self.modes.len() == 1 {
            return Err(FockError::InvalidModeCount(0));
        }
        let modes: Vec<ModeId> = self.modes.iter().copied().filter(|&m| m != mode).collect();
        let mut out = Self::vacuum(&modes, self.cutoff)?;
        out.rho.fill(Complex64::new(0.0, 0.0));
        out.truncation_loss = self.truncation_loss;
        let d = self.dimension();
        let reduce = |occ: Vec<usize>| -> (usize, Vec<usize>) {
            let n = occ[pos];
            let rest = occ
                .into_iter()
                .enumerate()
                .filter(|&(k, _)| k != pos)
                .map(|(_, v)| v)
                .collect();
            (n, rest)
        };
        let split: Vec<(usize, usize)> = (0..d)
            .map(|i| {
                let (n, rest) = reduce(self.decode(i));
                (n, out.encode(&rest))
            })
            .collect();
        for i in 0..d {
            for j in 0..d {
                if split[i].0 == split[j].0 {
                    out.rho[(split[i].1, split[j].1)] += self.rho[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Appends a fresh vacuum mode at the end of the register.
    pub fn with_vacuum_mode(&self, mode: ModeId) -> Result<Self> {
        let mut modes = self.modes.clone();
        modes.push(mode);
        let mut out = Self::vacuum(&modes, self.cutoff)?;
        out.truncation_loss = self.truncation_loss;
        let levels = self.levels();
        let d = self.dimension();
        for i in 0..d {
            for j in 0..d {
                out.rho[(i * levels, j * levels)] = self.rho[(i, j)];
            }
        }
        Ok(out)
    }
}
