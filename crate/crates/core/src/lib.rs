//! Simulation and analysis of heralded optomechanical Bell tests: a
//! truncated Fock-space engine, the experiment circuit with its noise
//! budget, reproducible trial sampling, and the coincidence statistics that
//! turn click counts into correlation coefficients and a CHSH value.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod fock;
pub mod model;
pub mod sampler;
