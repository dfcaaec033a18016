//! Estimators for click data: coincidence tables, correlation coefficients
//! and the CHSH parameter with their distributions, cross-correlations,
//! sideband thermometry, and fringe / heating fits.

mod chsh;
mod counts;
mod estimators;
mod fit;

pub use chsh::{
    chsh_analysis, chsh_point, correlation_coefficient, e_distribution, e_distribution_on, s_distribution,
    summarize_distribution, ChshResult, CorrelationEstimate, DistributionGrid, Summary, CHSH_SIGNS, CI_QUANTILES,
    E_GRID_NODES, SUPPORT_SIGMAS,
};
pub use counts::{
    coincidences_from_histogram, count_coincidences, count_singles, singles_from_histogram, read_counts, write_counts, CoincidenceTable, SettingCounts, SinglesTable,
    COUNTS_HEADER,
};
pub use estimators::{
    cross_correlation, predicted_visibility, sideband_occupancy, sideband_occupancy_error, CrossCorrelation,
    PredictedVisibility,
};
pub use fit::{
    exact_heating_points, fit_heating, fit_visibility, fringe_residual, heating_curve, heating_params, read_points,
    synthetic_delays, synthetic_heating_points, write_points, FitParam, FitPoint, FitResult,
    SYNTHETIC_COUNTS_PER_PHONON, SYNTHETIC_HEATING, SYNTHETIC_N_INIT, SYNTHETIC_SEED, POINTS_HEADER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("undefined result: {0}")]
    Undefined(&'static str),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("thermometry needs C_b > C_r, got C_b = {c_b}, C_r = {c_r}")]
    Thermometry { c_b: u64, c_r: u64 },
    #[error("under-determined fit: {0}")]
    Underdetermined(String),
    #[error("degenerate fit: {0}")]
    Degenerate(&'static str),
    #[error("fit did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
