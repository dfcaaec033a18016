use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Reference configuration of the two-device Bell test.
pub const REFERENCE_TOML: &str = include_str!("../../data/reference.toml");

/// Noise-free configuration used for the ideal-model checks.
pub const IDEAL_TOML: &str = include_str!("../../data/ideal.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Device {
    A,
    B,
}

impl Device {
    pub const BOTH: [Device; 2] = [Device::A, Device::B];
}

/// Double-exponential heating curve `a e^{-t/tau} - b e^{-t/eta_rise}`
/// added on top of the base occupation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatingParams {
    pub a: f64,
    pub b: f64,
    /// Energy lifetime (s).
    pub tau: f64,
    /// Rise timescale (s).
    pub eta_rise: f64,
}

impl HeatingParams {
    pub const NONE: HeatingParams = HeatingParams {
        a: 0.0,
        b: 0.0,
        tau: 1.0,
        eta_rise: 1.0,
    };

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.tau > 0.0) || !(self.eta_rise > 0.0) {
            return Err(ModelError::invalid("heating", "tau and eta_rise must be positive"));
        }
        if !(self.b >= 0.0 && self.a >= self.b) {
            return Err(ModelError::invalid("heating", "amplitudes must satisfy a >= b >= 0"));
        }
        Ok(())
    }
}

/// Per-device parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    /// Pair-creation probability of the blue pulse (`eps^2`).
    pub excitation_probability: f64,
    /// State-transfer probability of the red pulse.
    pub readout_efficiency: f64,
    /// Path efficiency from the device to detector 1 and detector 2,
    /// including the split at the output beamsplitter.
    pub detection_efficiency: [f64; 2],
    /// Base thermal occupation of the mechanical mode.
    pub n_init: f64,
    pub heating: HeatingParams,
}

/// Filtered-pump contamination of the detection windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakParams {
    /// Trial-averaged fraction of red-window counts on detector 1, 2 that are
    /// leaked drive photons.
    pub red_fraction: [f64; 2],
    /// Same for the blue window (both detectors).
    pub blue_fraction: f64,
    /// First-order interference visibility of the pump through the interferometer.
    pub interferometer_visibility: f64,
    /// Relative fringe amplitude per detector; the two outputs are in antiphase.
    pub modulation: [f64; 2],
    /// Pump phase (rad) at which detector 1 sees its leak maximum.
    pub phase_offset: f64,
}

impl LeakParams {
    pub fn none() -> Self {
        Self {
            red_fraction: [0.0, 0.0],
            blue_fraction: 0.0,
            interferometer_visibility: 0.0,
            modulation: [1.0, -1.0],
            phase_offset: 0.0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.red_fraction == [0.0, 0.0] && self.blue_fraction == 0.0
    }
}

/// Constants carried for documentation; none of them enters the simulation,
/// which is parameterized by the dimensionless pulse strengths only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    /// Single-photon coupling g0/2pi (Hz) for devices A, B.
    pub g0: [f64; 2],
    /// Mechanical frequencies (Hz).
    pub nu_m: [f64; 2],
    /// Optical resonance frequency (Hz).
    pub nu_o: f64,
    /// Optical linewidth (Hz).
    pub kappa: f64,
    /// Optical mismatch between devices (Hz).
    pub delta_nu_o: f64,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Drive pulse duration (s).
    pub pulse_duration: f64,
    /// Cryostat base temperature (K).
    pub base_temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device_a: DeviceConfig,
    pub device_b: DeviceConfig,
    /// Setup phase offset (rad); E = V cos(phi_b + phi_r - phi_c + omega).
    pub phi_c: f64,
    /// Extra phase from the mechanical frequency mismatch (rad). Kept at 0
    /// because the pulse delay is fixed.
    #[serde(default)]
    pub omega: f64,
    /// Mechanical frequency mismatch (Hz).
    pub delta_nu_m: f64,
    /// Blue-to-red pulse delay (s).
    pub delta_tau: f64,
    /// Trial repetition period (s).
    pub rep_period: f64,
    /// Dark count rate per detector (Hz).
    pub dark_rate: f64,
    /// Detection window per pulse (s).
    pub window: f64,
    /// Multiplier on the blue-window path efficiency (herald-rate calibration).
    #[serde(default = "one")]
    pub blue_efficiency_scale: f64,
    pub leak: LeakParams,
    /// Fock cutoff used by the engine.
    pub cutoff: usize,
    #[serde(default)]
    pub constants: Constants,
}

fn one() -> f64 {
    1.0
}

fn unit(field: &'static str, v: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ModelError::invalid(field, format!("{v} is outside [0, 1]")))
    }
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        Self::from_toml_str(REFERENCE_TOML).expect("bundled reference.toml is valid")
    }

    pub fn ideal() -> Self {
        Self::from_toml_str(IDEAL_TOML).expect("bundled ideal.toml is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let config: Self = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn device(&self, device: Device) -> &DeviceConfig {
        match device {
            Device::A => &self.device_a,
            Device::B => &self.device_b,
        }
    }

    pub fn device_mut(&mut self, device: Device) -> &mut DeviceConfig {
        match device {
            Device::A => &mut self.device_a,
            Device::B => &mut self.device_b,
        }
    }

    /// Copy with leaks and dark counts switched off.
    pub fn without_background(&self) -> Self {
        let mut out = self.clone();
        out.leak = LeakParams::none();
        out.dark_rate = 0.0;
        out
    }

    /// Copy with leaks switched off but dark counts kept.
    pub fn without_leaks(&self) -> Self {
        let mut out = self.clone();
        out.leak = LeakParams::none();
        out
    }

    /// Phase accumulated over the pulse delay from the mechanical mismatch,
    /// `2 pi delta_nu_m delta_tau`. Not applied unless copied into `omega`.
    pub fn mismatch_phase(&self) -> f64 {
        2.0 * PI * self.delta_nu_m * self.delta_tau
    }

    /// Dark-count probability per detection window.
    pub fn dark_probability(&self) -> f64 {
        (self.dark_rate * self.window).min(1.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, d) in [("device_a", &self.device_a), ("device_b", &self.device_b)] {
            unit(name, d.excitation_probability)?;
            if d.excitation_probability >= 1.0 {
                return Err(ModelError::invalid(name, "excitation probability must be < 1"));
            }
            unit(name, d.readout_efficiency)?;
            unit(name, d.detection_efficiency[0])?;
            unit(name, d.detection_efficiency[1])?;
            if d.detection_efficiency[0] + d.detection_efficiency[1] > 1.0 {
                return Err(ModelError::invalid(name, "detection efficiencies sum above 1"));
            }
            if !(d.n_init >= 0.0) {
                return Err(ModelError::invalid(name, "n_init must be non-negative"));
            }
            d.heating.validate()?;
        }
        for f in self.leak.red_fraction.iter().chain([&self.leak.blue_fraction]) {
            if !(0.0..1.0).contains(f) {
                return Err(ModelError::invalid("leak", "fractions must lie in [0, 1)"));
            }
        }
        unit("leak.interferometer_visibility", self.leak.interferometer_visibility)?;
        if self.leak.modulation.iter().any(|m| m.abs() > 1.0) {
            return Err(ModelError::invalid("leak.modulation", "amplitudes must lie in [-1, 1]"));
        }
        if !(self.delta_tau >= 0.0 && self.delta_tau < self.rep_period) {
            return Err(ModelError::invalid("delta_tau", "must satisfy 0 <= delta_tau < rep_period"));
        }
        if !(self.dark_rate >= 0.0 && self.window >= 0.0) {
            return Err(ModelError::invalid("dark_rate", "rates and windows must be non-negative"));
        }
        if !(self.blue_efficiency_scale > 0.0) {
            return Err(ModelError::invalid("blue_efficiency_scale", "must be positive"));
        }
        let blue_max = self.blue_efficiency_scale
            * [&self.device_a, &self.device_b]
                .iter()
                .map(|d| d.detection_efficiency[0] + d.detection_efficiency[1])
                .fold(0.0, f64::max);
        if blue_max > 1.0 {
            return Err(ModelError::invalid("blue_efficiency_scale", "scaled efficiency above 1"));
        }
        if !(crate::fock::MIN_CUTOFF..=crate::fock::MAX_CUTOFF).contains(&self.cutoff) {
            return Err(ModelError::invalid("cutoff", format!("{} unsupported", self.cutoff)));
        }
        Ok(())
    }
}

/// Phase setting of one measurement: blue phase, red phase and optional
/// CHSH label `(i, j)`. Angles are stored in `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSetting {
    pub phi_b: f64,
    pub phi_r: f64,
    pub label: Option<(u8, u8)>,
}

pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y >= 2.0 * PI {
        0.0
    } else {
        y
    }
}

impl PhaseSetting {
    pub fn new(phi_b: f64, phi_r: f64) -> Self {
        Self {
            phi_b: wrap_angle(phi_b),
            phi_r: wrap_angle(phi_r),
            label: None,
        }
    }

    /// Optimal CHSH angles: `phi_b in {0, pi/2}`, `phi_r in {phi_c - pi/4, phi_c + pi/4}`.
    pub fn chsh(i: u8, j: u8, phi_c: f64) -> Self {
        assert!(matches!(i, 1 | 2) && matches!(j, 1 | 2), "CHSH settings are 1 or 2");
        let phi_b = if i == 1 { 0.0 } else { PI / 2.0 };
        let phi_r = if j == 1 { phi_c - PI / 4.0 } else { phi_c + PI / 4.0 };
        Self {
            label: Some((i, j)),
            ..Self::new(phi_b, phi_r)
        }
    }

    pub fn chsh_all(phi_c: f64) -> [Self; 4] {
        [(1, 1), (1, 2), (2, 1), (2, 2)].map(|(i, j)| Self::chsh(i, j, phi_c))
    }
}
