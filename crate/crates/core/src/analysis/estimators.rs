use serde::{Deserialize, Serialize};

use super::{AnalysisError, SinglesTable};

/// Normalized blue-red cross-correlation of one measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelation {
    pub g2: f64,
    /// Poisson uncertainty of `g2` from the coincidence count.
    pub g2_error: f64,
    pub c_b: u64,
    pub c_r: u64,
    pub coincidences: u64,
    pub trials: u64,
}

/// `g2 = P(b and r) / (P(b) P(r))` with per-trial frequencies.
pub fn cross_correlation(table: &SinglesTable) -> Result<CrossCorrelation, AnalysisError> {
    if table.blue == 0 || table.red == 0 || table.trials == 0 {
        return Err(AnalysisError::Undefined("zero singles"));
    }
    let n = table.trials as f64;
    let g2 = (table.both as f64 / n) / ((table.blue as f64 / n) * (table.red as f64 / n));
    let g2_error = if table.both > 0 { g2 / (table.both as f64).sqrt() } else { 0.0 };
    Ok(CrossCorrelation {
        g2,
        g2_error,
        c_b: table.blue,
        c_r: table.red,
        coincidences: table.both,
        trials: table.trials,
    })
}

/// Fringe visibility implied by a cross-correlation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedVisibility {
    pub visibility: f64,
    /// Set when `g2 < 1` and the visibility was clamped to zero.
    pub clamped: bool,
}

/// `(g2 - 1) / (g2 + 1)`, clamped at zero.
pub fn predicted_visibility(g2: f64) -> PredictedVisibility {
    let v = (g2 - 1.0) / (g2 + 1.0);
    if v < 0.0 {
        PredictedVisibility {
            visibility: 0.0,
            clamped: true,
        }
    } else {
        PredictedVisibility {
            visibility: v,
            clamped: false,
        }
    }
}

/// Occupation from sideband asymmetry, `C_r / (C_b - C_r)`.
pub fn sideband_occupancy(c_b: u64, c_r: u64) -> Result<f64, AnalysisError> {
    if c_b <= c_r {
        return Err(AnalysisError::Thermometry { c_b, c_r });
    }
    Ok(c_r as f64 / (c_b - c_r) as f64)
}

/// Poisson standard error of [`sideband_occupancy`].
pub fn sideband_occupancy_error(c_b: u64, c_r: u64) -> Result<f64, AnalysisError> {
    sideband_occupancy(c_b, c_r)?;
    let (b, r) = (c_b as f64, c_r as f64);
    let d = b - r;
    // dn/dC_r = C_b / d^2, dn/dC_b = -C_r / d^2
    Ok(((b / (d * d)).powi(2) * r + (r / (d * d)).powi(2) * b).sqrt())
}
