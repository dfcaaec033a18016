//! Dense density-operator simulation of a small register of bosonic modes.
//!
//! States live in a truncated Fock space with a common occupation cutoff per
//! mode. Every operation is a pure function `&TruncatedState -> TruncatedState`.
//! Non-passive operations (two-mode squeezing, amplification) are built on a
//! buffered space and projected back; the population pushed past the cutoff is
//! accumulated in [`TruncatedState::truncation_loss`] and the state is
//! renormalized.

mod click;
mod ops;
mod state;

pub use click::{ClickDistribution, ClickPattern};
pub use state::{ModeId, TruncatedState, MAX_CUTOFF, MAX_DIMENSION, MAX_MODES, MIN_CUTOFF};

use thiserror::Error;

/// Tolerated negative eigenvalue before a state is considered corrupt.
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("cutoff {0} outside supported range {MIN_CUTOFF}..={MAX_CUTOFF}")]
    InvalidCutoff(usize),
    #[error("register must hold between 1 and {MAX_MODES} modes, got {0}")]
    InvalidModeCount(usize),
    #[error("hilbert space dimension {dimension} exceeds the dense limit {MAX_DIMENSION}")]
    DimensionOverflow { dimension: usize },
    #[error("mode {0:?} appears twice in the register")]
    DuplicateMode(ModeId),
    #[error("mode {0:?} is not part of the register")]
    UnknownMode(ModeId),
    #[error("two-mode operation needs distinct modes, got {0:?} twice")]
    SameMode(ModeId),
    #[error("{name} = {value} is outside its allowed range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("mode {0:?} is not in the vacuum state")]
    NotVacuum(ModeId),
    #[error("internal consistency violated: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, FockError>;
