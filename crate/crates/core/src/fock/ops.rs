//! Gaussian primitives, loss and noise channels acting on [`TruncatedState`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::TruncatedState;
use super::{FockError, ModeId, Result};

type Op = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Number of extra levels kept above the cutoff when exponentiating the
/// squeezing generator.
const SQUEEZE_BUFFER: usize = 2;

fn creation(levels: usize) -> Op {
    let mut a = Op::zeros(levels, levels);
    for n in 0..levels - 1 {
        a[(n + 1, n)] = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    a
}

fn kron(a: &Op, b: &Op) -> Op {
    a.kronecker(b)
}

/// Restricts a two-mode operator on `big` levels per mode to `small` levels.
fn project_two_mode(u: &Op, big: usize, small: usize) -> Op {
    let mut out = Op::zeros(small * small, small * small);
    for i in 0..small * small {
        let (ia, ib) = (i / small, i % small);
        for j in 0..small * small {
            let (ja, jb) = (j / small, j % small);
            out[(i, j)] = u[(ia * big + ib, ja * big + jb)];
        }
    }
    out
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(FockError::OutOfRange { name, value });
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl TruncatedState {
    /// Global basis indices grouped by the occupations of every mode outside
    /// `positions`; within a group the entries are ordered by local index.
    fn local_groups(&self, positions: &[usize]) -> Vec<Vec<usize>> {
        let levels = self.levels();
        let local_dim = levels.pow(positions.len() as u32);
        let rest_dim = self.dimension() / local_dim;
        let mut groups = vec![vec![0usize; local_dim]; rest_dim];
        for i in 0..self.dimension() {
            let occ = self.decode(i);
            let local = positions.iter().fold(0, |acc, &p| acc * levels + occ[p]);
            let rest = occ
                .iter()
                .enumerate()
                .filter(|(k, _)| !positions.contains(k))
                .fold(0, |acc, (_, &n)| acc * levels + n);
            groups[rest][local] = i;
        }
        groups
    }

    /// `op * rho * op^dagger` with `op` acting on the modes at `positions`.
    fn sandwich(rho: &Op, op: &Op, groups: &[Vec<usize>]) -> Op {
        let dim = rho.nrows();
        let d = op.nrows();
        let mut left = Op::zeros(dim, dim);
        let mut buf = vec![ZERO; d];
        for c in 0..dim {
            for g in groups {
                for (l, &gi) in g.iter().enumerate() {
                    buf[l] = rho[(gi, c)];
                }
                for (lp, &gi) in g.iter().enumerate() {
                    let mut acc = ZERO;
                    for (l, b) in buf.iter().enumerate() {
                        acc += op[(lp, l)] * b;
                    }
                    left[(gi, c)] = acc;
                }
            }
        }
        let mut out = Op::zeros(dim, dim);
        for g in groups {
            for r in 0..dim {
                for (l, &gi) in g.iter().enumerate() {
                    buf[l] = left[(r, gi)];
                }
                for (lp, &gi) in g.iter().enumerate() {
                    let mut acc = ZERO;
                    for (l, b) in buf.iter().enumerate() {
                        acc += b * op[(lp, l)].conj();
                    }
                    out[(r, gi)] = acc;
                }
            }
        }
        out
    }

    fn apply_kraus(&self, kraus: &[Op], modes: &[ModeId]) -> Result<Self> {
        let positions = modes
            .iter()
            .map(|&m| self.position(m))
            .collect::<Result<Vec<_>>>()?;
        let groups = self.local_groups(&positions);
        let mut rho = Op::zeros(self.dimension(), self.dimension());
        for k in kraus {
            rho += Self::sandwich(&self.rho, k, &groups);
        }
        let mut out = Self {
            modes: self.modes.clone(),
            cutoff: self.cutoff,
            rho,
            truncation_loss: self.truncation_loss,
        };
        out.renormalize();
        Ok(out)
    }

    /// Restores unit trace after a projection, booking the discarded
    /// population. Hermiticity is re-imposed to keep rounding from drifting.
    fn renormalize(&mut self) {
        let tr = self.trace();
        let loss = 1.0 - tr;
        if loss.abs() > 0.0 {
            self.truncation_loss += loss.max(0.0);
            self.rho /= Complex64::new(tr, 0.0);
        }
        let adj = self.rho.adjoint();
        self.rho = (&self.rho + adj) * Complex64::new(0.5, 0.0);
    }

    fn two_distinct(&self, a: ModeId, b: ModeId) -> Result<()> {
        if a == b {
            return Err(FockError::SameMode(a));
        }
        self.position(a)?;
        self.position(b)?;
        Ok(())
    }

    /// Puts `mode`, which must be in vacuum, into a truncated thermal state
    /// with weights proportional to `(nbar / (1 + nbar))^n`.
    pub fn set_thermal(&self, mode: ModeId, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(FockError::OutOfRange { name: "nbar", value: nbar });
        }
        let pops = self.mode_populations(mode)?;
        if pops[1..].iter().any(|&p| p > 1e-12) {
            return Err(FockError::NotVacuum(mode));
        }
        let weights = thermal_weights(nbar, self.cutoff);
        let levels = self.levels();
        let kraus: Vec<Op> = weights
            .iter()
            .enumerate()
            .map(|(n, w)| {
                let mut k = Op::zeros(levels, levels);
                k[(n, 0)] = Complex64::new(w.sqrt(), 0.0);
                k
            })
            .collect();
        self.apply_kraus(&kraus, &[mode])
    }

    /// Two-mode squeezer `exp(xi a^dag b^dag - xi^* a b)` with
    /// `xi = artanh(epsilon) e^{i phase}`; for vacuum input the pair
    /// populations are `(1 - eps^2) eps^{2n}`.
    pub fn apply_two_mode_squeeze(&self, a: ModeId, b: ModeId, epsilon: f64, phase: f64) -> Result<Self> {
        self.two_distinct(a, b)?;
        if !(0.0..1.0).contains(&epsilon) {
            return Err(FockError::OutOfRange { name: "epsilon", value: epsilon });
        }
        if epsilon == 0.0 {
            return Ok(self.clone());
        }
        let big = self.levels() + SQUEEZE_BUFFER;
        let xi = Complex64::from_polar(epsilon.atanh(), phase);
        let ad = creation(big);
        let pair = kron(&ad, &ad);
        let generator = &pair * xi - pair.adjoint() * xi.conj();
        let u = generator.exp();
        let op = project_two_mode(&u, big, self.levels());
        self.apply_kraus(&[op], &[a, b])
    }

    /// Passive two-mode unitary `exp(theta (e^{i phase} a^dag b - h.c.))`
    /// with `cos^2 theta = transmissivity`.
    pub fn apply_beamsplitter(&self, a: ModeId, b: ModeId, transmissivity: f64, phase: f64) -> Result<Self> {
        self.two_distinct(a, b)?;
        check_unit_interval("transmissivity", transmissivity)?;
        if transmissivity == 1.0 {
            return Ok(self.clone());
        }
        let theta = transmissivity.sqrt().acos();
        // every block of total number <= 2 * cutoff is closed on this space
        let big = 2 * self.cutoff + 1;
        let ad = creation(big);
        let id = Op::identity(big, big);
        let hop = kron(&ad, &id) * kron(&id, &ad.adjoint());
        let rot = Complex64::from_polar(theta, phase);
        let generator = &hop * rot - hop.adjoint() * rot.conj();
        let u = generator.exp();
        let op = project_two_mode(&u, big, self.levels());
        self.apply_kraus(&[op], &[a, b])
    }

    /// Phase shift `exp(i phi n)` on one mode.
    pub fn apply_phase(&self, mode: ModeId, phi: f64) -> Result<Self> {
        let pos = self.position(mode)?;
        let mut out = self.clone();
        let d = self.dimension();
        let occ: Vec<usize> = (0..d).map(|i| self.occupation(i, pos)).collect();
        for i in 0..d {
            for j in 0..d {
                let dn = occ[i] as f64 - occ[j] as f64;
                if dn != 0.0 {
                    out.rho[(i, j)] *= Complex64::from_polar(1.0, dn * phi);
                }
            }
        }
        Ok(out)
    }

    /// Pure-loss channel keeping each excitation with probability `eta`.
    pub fn apply_loss(&self, mode: ModeId, eta: f64) -> Result<Self> {
        self.position(mode)?;
        check_unit_interval("eta", eta)?;
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let levels = self.levels();
        let kraus: Vec<Op> = (0..levels)
            .map(|k| {
                let mut op = Op::zeros(levels, levels);
                for n in k..levels {
                    let amp = binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32);
                    op[(n - k, n)] = Complex64::new(amp.sqrt(), 0.0);
                }
                op
            })
            .collect();
        self.apply_kraus(&kraus, &[mode])
    }

    /// Phase-insensitive amplifier of gain `gain >= 1` (vacuum ancilla).
    pub fn apply_amplifier(&self, mode: ModeId, gain: f64) -> Result<Self> {
        self.position(mode)?;
        if !(gain >= 1.0) || !gain.is_finite() {
            return Err(FockError::OutOfRange { name: "gain", value: gain });
        }
        if gain == 1.0 {
            return Ok(self.clone());
        }
        let levels = self.levels();
        let t = (gain - 1.0) / gain;
        let kraus: Vec<Op> = (0..levels)
            .map(|k| {
                let mut op = Op::zeros(levels, levels);
                for n in 0..levels - k {
                    let amp = binomial(n + k, k) * t.powi(k as i32) / gain.powi(n as i32 + 1);
                    op[(n + k, n)] = Complex64::new(amp.sqrt(), 0.0);
                }
                op
            })
            .collect();
        self.apply_kraus(&kraus, &[mode])
    }

    /// Classical additive thermal noise: loss `1/(1+n)` followed by
    /// amplification `1+n`, adding `n` quanta to the mean occupation and
    /// turning vacuum into a thermal state of mean `n`.
    pub fn apply_thermal_noise(&self, mode: ModeId, added: f64) -> Result<Self> {
        if !(added >= 0.0) || !added.is_finite() {
            return Err(FockError::OutOfRange { name: "added occupation", value: added });
        }
        let gain = 1.0 + added;
        self.apply_loss(mode, 1.0 / gain)?.apply_amplifier(mode, gain)
    }
}

/// Bose-Einstein weights truncated at `cutoff` and renormalized.
pub fn thermal_weights(nbar: f64, cutoff: usize) -> Vec<f64> {
    let ratio = if nbar == 0.0 { 0.0 } else { nbar / (1.0 + nbar) };
    let raw: Vec<f64> = (0..=cutoff).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}
