//! Assembly of the interferometric Bell-test circuit on the Fock engine.
//!
//! Register: optical Stokes modes `o_A`, `o_B` and mechanical modes `m_A`,
//! `m_B`. The red-pulse state transfer is a partial beamsplitter onto a vacuum
//! readout mode followed by discarding the mechanics, which is the pure-loss
//! channel on the mechanical mode; after it, `m_X` stands for the anti-Stokes
//! readout field of arm X.

use std::f64::consts::PI;

use crate::fock::{ModeId, TruncatedState};

use super::{
    occupancy_at, Device, DeviceConfig, ExperimentConfig, ModelError, OutcomeDistribution, PhaseSetting,
};

const O_A: ModeId = ModeId(0);
const M_A: ModeId = ModeId(1);
const O_B: ModeId = ModeId(2);
const M_B: ModeId = ModeId(3);
const REGISTER: [ModeId; 4] = [O_A, M_A, O_B, M_B];

/// Phase sweep used to average signal singles when calibrating leaks.
const LEAK_SWEEP_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    Blue,
    Red,
}

/// Separable factorization of the quoted path efficiencies,
/// `eta(device, detector) = 0.5 * arm[device] * detector[detector]`.
/// `arm` is applied before the output beamsplitter and `detector` after it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEfficiencies {
    pub arm: [f64; 2],
    pub detector: [f64; 2],
    /// Largest relative mismatch between the product form and the quoted values.
    pub max_relative_error: f64,
}

impl PathEfficiencies {
    /// Least-squares fit of `ln(2 eta)` by device and detector offsets, with
    /// the best detector normalized to unit survival.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self, ModelError> {
        let eta = [config.device_a.detection_efficiency, config.device_b.detection_efficiency];
        if eta.iter().flatten().any(|&e| e <= 0.0) {
            // degenerate paths: keep the arms transparent and push everything
            // to the detectors of device A's row
            return Ok(Self {
                arm: [1.0, 1.0],
                detector: [2.0 * eta[0][0], 2.0 * eta[0][1]],
                max_relative_error: f64::NAN,
            });
        }
        let ln = |d: usize, k: usize| (2.0 * eta[d][k]).ln();
        let dy = 0.5 * ((ln(0, 1) - ln(0, 0)) + (ln(1, 1) - ln(1, 0)));
        let y = if dy <= 0.0 { [0.0, dy] } else { [-dy, 0.0] };
        let x = [0, 1].map(|d| 0.5 * ((ln(d, 0) - y[0]) + (ln(d, 1) - y[1])));
        let arm = x.map(f64::exp);
        let detector = y.map(f64::exp);
        if arm.iter().any(|&a| a > 1.0) {
            return Err(ModelError::invalid(
                "detection_efficiency",
                "arm efficiency above one after factorization",
            ));
        }
        let mut max_relative_error = 0.0f64;
        for d in 0..2 {
            for k in 0..2 {
                let model = 0.5 * arm[d] * detector[k];
                max_relative_error = max_relative_error.max((model / eta[d][k] - 1.0).abs());
            }
        }
        Ok(Self {
            arm,
            detector,
            max_relative_error,
        })
    }
}

/// What a device does during one trial.
#[derive(Clone, Copy, Debug)]
struct Drive {
    pair_probability: f64,
    transfer: f64,
    n_init: f64,
    added_heat: f64,
}

impl Drive {
    fn from_device(d: &DeviceConfig, delta_tau: f64) -> Self {
        let total = occupancy_at(&d.heating, d.n_init, delta_tau);
        Self {
            pair_probability: d.excitation_probability,
            transfer: d.readout_efficiency,
            n_init: d.n_init,
            added_heat: (total - d.n_init).max(0.0),
        }
    }

    fn idle(n_init: f64) -> Self {
        Self {
            pair_probability: 0.0,
            transfer: 0.0,
            n_init,
            added_heat: 0.0,
        }
    }
}

/// Mean leak click probability per window and detector, before phase modulation.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LeakMeans {
    blue: [f64; 2],
    red: [f64; 2],
}

/// A configured experiment with its leak calibration resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    paths: PathEfficiencies,
    leak: LeakMeans,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let paths = PathEfficiencies::from_config(&config)?;
        let mut exp = Self {
            config,
            paths,
            leak: LeakMeans {
                blue: [0.0; 2],
                red: [0.0; 2],
            },
        };
        exp.leak = exp.calibrate_leaks(exp.drives())?;
        Ok(exp)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn paths(&self) -> &PathEfficiencies {
        &self.paths
    }

    fn drives(&self) -> [Drive; 2] {
        [
            Drive::from_device(&self.config.device_a, self.config.delta_tau),
            Drive::from_device(&self.config.device_b, self.config.delta_tau),
        ]
    }

    /// Runs the circuit and returns the click distribution over
    /// `(b1, b2, r1, r2)` without any background.
    fn evolve(&self, setting: &PhaseSetting, drives: [Drive; 2]) -> Result<OutcomeDistribution, ModelError> {
        let c = &self.config;
        let blue_arm = self.paths.arm.map(|a| (a * c.blue_efficiency_scale).min(1.0));
        let mut s = TruncatedState::vacuum(&REGISTER, c.cutoff)?;
        s = s.set_thermal(M_A, drives[0].n_init)?;
        s = s.set_thermal(M_B, drives[1].n_init)?;
        s = s.apply_two_mode_squeeze(O_A, M_A, drives[0].pair_probability.sqrt(), 0.0)?;
        s = s.apply_two_mode_squeeze(O_B, M_B, drives[1].pair_probability.sqrt(), 0.0)?;

        // Stokes photons: phase in arm A, arm losses, recombination, detector losses
        s = s.apply_phase(O_A, setting.phi_b)?;
        s = s.apply_loss(O_A, blue_arm[0])?;
        s = s.apply_loss(O_B, blue_arm[1])?;
        s = s.apply_beamsplitter(O_A, O_B, 0.5, 0.0)?;
        s = s.apply_loss(O_A, self.paths.detector[0])?;
        s = s.apply_loss(O_B, self.paths.detector[1])?;

        // heating accumulated until the red pulse, then state transfer
        s = s.apply_thermal_noise(M_A, drives[0].added_heat)?;
        s = s.apply_thermal_noise(M_B, drives[1].added_heat)?;
        s = s.apply_loss(M_A, drives[0].transfer * self.paths.arm[0])?;
        s = s.apply_loss(M_B, drives[1].transfer * self.paths.arm[1])?;
        s = s.apply_phase(M_A, setting.phi_r + c.omega - c.phi_c)?;
        s = s.apply_beamsplitter(M_A, M_B, 0.5, 0.0)?;
        s = s.apply_loss(M_A, self.paths.detector[0])?;
        s = s.apply_loss(M_B, self.paths.detector[1])?;

        let clicks = s.click_distribution(&[O_A, O_B, M_A, M_B])?;
        let mut p = [0.0; 16];
        p.copy_from_slice(clicks.probabilities());
        OutcomeDistribution::new(p)
    }

    /// Click distribution from the optomechanical state alone.
    pub fn quantum_distribution(&self, setting: &PhaseSetting) -> Result<OutcomeDistribution, ModelError> {
        self.evolve(setting, self.drives())
    }

    /// Leak means such that, averaged over a phase sweep, leaked photons make
    /// up the configured fraction of the counts of each window and detector.
    fn calibrate_leaks(&self, drives: [Drive; 2]) -> Result<LeakMeans, ModelError> {
        let mut blue = [0.0; 2];
        let mut red = [0.0; 2];
        if self.config.leak.is_off() {
            return Ok(LeakMeans { blue, red });
        }
        for k in 0..LEAK_SWEEP_POINTS {
            let phi = 2.0 * PI * k as f64 / LEAK_SWEEP_POINTS as f64;
            let d = self.evolve(&PhaseSetting::new(phi, phi), drives)?;
            for det in 0..2 {
                blue[det] += d.blue_single(det) / LEAK_SWEEP_POINTS as f64;
                red[det] += d.red_single(det) / LEAK_SWEEP_POINTS as f64;
            }
        }
        let leak = &self.config.leak;
        let scale = |f: f64| f / (1.0 - f);
        Ok(LeakMeans {
            blue: [0, 1].map(|k| scale(leak.blue_fraction) * blue[k]),
            red: [0, 1].map(|k| scale(leak.red_fraction[k]) * red[k]),
        })
    }

    /// Leaked-pump click probability for one window and detector (0 or 1).
    pub fn leak_probability(&self, setting: &PhaseSetting, window: Window, detector: usize) -> f64 {
        self.modulated_leak(&self.leak, setting, window, detector)
    }

    fn modulated_leak(&self, means: &LeakMeans, setting: &PhaseSetting, window: Window, detector: usize) -> f64 {
        let leak = &self.config.leak;
        let (mean, phase) = match window {
            Window::Blue => (means.blue[detector], setting.phi_b),
            Window::Red => (means.red[detector], setting.phi_r),
        };
        let amplitude = leak.modulation[detector] * leak.interferometer_visibility;
        (mean * (1.0 + amplitude * (phase - leak.phase_offset).cos())).clamp(0.0, 1.0)
    }

    /// Background click probability (dark counts OR leaks) per trial.
    pub fn background_probability(&self, setting: &PhaseSetting, window: Window, detector: usize) -> f64 {
        self.background_with(&self.leak, setting, window, detector)
    }

    fn background_with(&self, means: &LeakMeans, setting: &PhaseSetting, window: Window, detector: usize) -> f64 {
        let dark = self.config.dark_probability();
        let leak = self.modulated_leak(means, setting, window, detector);
        1.0 - (1.0 - dark) * (1.0 - leak)
    }

    fn background_vector(&self, means: &LeakMeans, setting: &PhaseSetting) -> [f64; 4] {
        [
            self.background_with(means, setting, Window::Blue, 0),
            self.background_with(means, setting, Window::Blue, 1),
            self.background_with(means, setting, Window::Red, 0),
            self.background_with(means, setting, Window::Red, 1),
        ]
    }

    /// Full 16-outcome distribution including dark counts and leaks.
    pub fn outcome_distribution(&self, setting: &PhaseSetting) -> Result<OutcomeDistribution, ModelError> {
        Ok(self
            .quantum_distribution(setting)?
            .with_background(self.background_vector(&self.leak, setting)))
    }

    /// Same circuit with only `device` driven; the other arm stays thermal
    /// and is never read out. Leaks are recalibrated so that they make up the
    /// configured fraction of this measurement's counts.
    pub fn single_device_distribution(
        &self,
        device: Device,
        setting: &PhaseSetting,
    ) -> Result<OutcomeDistribution, ModelError> {
        let mut drives = self.drives();
        match device {
            Device::A => drives[1] = Drive::idle(self.config.device_b.n_init),
            Device::B => drives[0] = Drive::idle(self.config.device_a.n_init),
        }
        let means = self.calibrate_leaks(drives)?;
        Ok(self
            .evolve(setting, drives)?
            .with_background(self.background_vector(&means, setting)))
    }

    /// Sideband-asymmetry thermometry trial on one device: a blue-only pulse
    /// and a red-only pulse of equal scattering strength, recorded in the blue
    /// and red windows of the same record. The red transfer probability
    /// `p / (1 - p)` matches the mean Stokes rate of the blue pulse per
    /// `(n + 1)`, so the asymmetry of the two rates reads out `n_init`.
    pub fn sideband_distribution(&self, device: Device, with_background: bool) -> Result<OutcomeDistribution, ModelError> {
        let slot = match device {
            Device::A => 0,
            Device::B => 1,
        };
        let d = self.config.device(device);
        let p = d.excitation_probability;
        let mut blue_drives = [Drive::idle(self.config.device_a.n_init), Drive::idle(self.config.device_b.n_init)];
        blue_drives[slot].pair_probability = p;
        let mut red_drives = blue_drives;
        red_drives[slot].pair_probability = 0.0;
        red_drives[slot].transfer = p / (1.0 - p);
        // both pulses see the bare path efficiency
        let mut bare = self.clone();
        bare.config.blue_efficiency_scale = 1.0;
        let setting = PhaseSetting::new(0.0, 0.0);
        let blue = bare.evolve(&setting, blue_drives)?;
        let red = bare.evolve(&setting, red_drives)?;
        let window = |d: &OutcomeDistribution, shift: usize| {
            let mut w = [0.0; 4];
            for (i, v) in d.probabilities().iter().enumerate() {
                w[(i >> shift) & 0b11] += v;
            }
            w
        };
        let combined = OutcomeDistribution::from_windows(window(&blue, 0), window(&red, 2))?;
        Ok(if with_background {
            combined.with_background(self.background_vector(&self.leak, &setting))
        } else {
            combined
        })
    }

    /// Fringe amplitude of the post-selected correlation: half the
    /// difference between the correlation at `phi_b + phi_r - phi_c + omega`
    /// equal to 0 and to pi. Unequal detector efficiencies add a small
    /// constant offset to the fringe, which this definition ignores.
    pub fn visibility(&self) -> Result<f64, ModelError> {
        let top = PhaseSetting::new(0.0, self.config.phi_c - self.config.omega);
        let bottom = PhaseSetting::new(0.0, self.config.phi_c - self.config.omega + PI);
        let e_top = self.outcome_distribution(&top)?.correlation()?;
        let e_bottom = self.outcome_distribution(&bottom)?.correlation()?;
        Ok(0.5 * (e_top - e_bottom))
    }
}

/// Joint click distribution over `(b1, b2, r1, r2)` for one phase setting.
pub fn build_outcome_distribution(
    config: &ExperimentConfig,
    setting: &PhaseSetting,
) -> Result<OutcomeDistribution, ModelError> {
    Experiment::new(config.clone())?.outcome_distribution(setting)
}

/// Background (dark OR leak) click probability per trial for one window
/// and detector (0 or 1).
pub fn background_click_probability(
    config: &ExperimentConfig,
    setting: &PhaseSetting,
    window: Window,
    detector: usize,
) -> Result<f64, ModelError> {
    Ok(Experiment::new(config.clone())?.background_probability(setting, window, detector))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_efficiencies_factorize_closely() {
        let p = PathEfficiencies::from_config(&ExperimentConfig::reference()).unwrap();
        assert!(p.max_relative_error < 0.03, "{p:?}");
        assert_eq!(p.detector[0], 1.0);
        let ideal = PathEfficiencies::from_config(&ExperimentConfig::ideal()).unwrap();
        assert_eq!(ideal.arm, [1.0, 1.0]);
        assert_eq!(ideal.detector, [1.0, 1.0]);
    }

    #[test]
    fn dark_only_background() {
        let mut c = ExperimentConfig::reference();
        c.leak = crate::model::LeakParams::none();
        let p = background_click_probability(&c, &PhaseSetting::new(0.0, 0.0), Window::Red, 1).unwrap();
        assert!((p - 6e-7).abs() < 1e-15);
    }

    #[test]
    fn no_drive_no_clicks() {
        let mut c = ExperimentConfig::reference().without_background();
        for d in Device::BOTH {
            let dev = c.device_mut(d);
            dev.excitation_probability = 0.0;
            dev.n_init = 0.0;
            dev.heating = crate::model::HeatingParams::NONE;
        }
        let d = build_outcome_distribution(&c, &PhaseSetting::new(0.3, 1.2)).unwrap();
        assert!((d.probability([false; 2], [false; 2]) - 1.0).abs() < 1e-12);
    }
}
