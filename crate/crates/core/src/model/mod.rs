//! The two-device Bell-test circuit: configuration, noise budget and exact
//! joint click distributions per phase setting.

mod config;
mod distribution;
mod heating;
mod pipeline;

pub use config::{
    wrap_angle, Constants, Device, DeviceConfig, ExperimentConfig, HeatingParams, LeakParams, PhaseSetting,
    IDEAL_TOML, REFERENCE_TOML,
};
pub use distribution::{OutcomeDistribution, OUTCOMES};
pub use heating::{ideal_correlation, occupancy_at};
pub use pipeline::{
    background_click_probability, build_outcome_distribution, Experiment, PathEfficiencies, Window,
};

use thiserror::Error;

use crate::fock::FockError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("cannot read configuration: {0}")]
    Io(String),
    #[error("distribution is not normalized (total {0})")]
    Unnormalized(f64),
    #[error("no heralded coincidences in the distribution")]
    NoCoincidences,
    #[error(transparent)]
    Engine(#[from] FockError),
}

impl ModelError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
