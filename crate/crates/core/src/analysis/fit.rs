//! Weighted least-squares fits: the sinusoidal correlation fringe and the
//! double-exponential heating curve.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::model::HeatingParams;

use super::{sideband_occupancy, sideband_occupancy_error, AnalysisError};

pub const POINTS_HEADER: &str = "x,y,sigma";

const MAX_ITERATIONS: usize = 200;
const RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl FitPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// Residual-scaled standard error; `None` for a held parameter or where
    /// the normal matrix is singular.
    pub uncertainty: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Square root of the weighted sum of squared residuals.
    pub residual_norm: f64,
    pub degrees_of_freedom: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).and_then(|p| p.uncertainty)
    }
}

fn param(name: &str, value: f64, uncertainty: f64) -> FitParam {
    FitParam {
        name: name.to_string(),
        value,
        uncertainty: uncertainty.is_finite().then_some(uncertainty),
    }
}

fn check_points(points: &[FitPoint], min: usize) -> Result<(), AnalysisError> {
    if points.len() < min {
        return Err(AnalysisError::Underdetermined(format!(
            "need at least {min} points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.sigma > 0.0) || !p.x.is_finite() || !p.y.is_finite()) {
        return Err(AnalysisError::Underdetermined(format!("bad point {p:?}")));
    }
    Ok(())
}

/// Residual `sum w (y - V cos(x - phi0))^2` of a fringe candidate.
pub fn fringe_residual(points: &[FitPoint], visibility: f64, phi0: f64) -> f64 {
    points
        .iter()
        .map(|p| ((p.y - visibility * (p.x - phi0).cos()) / p.sigma).powi(2))
        .sum()
}

/// Fits `E = V cos(x - phi0)` with `x = phi_b + phi_r`, no offset, via the
/// linear parameters `c = V cos phi0`, `s = V sin phi0`.
pub fn fit_visibility(points: &[FitPoint]) -> Result<FitResult, AnalysisError> {
    check_points(points, 4)?;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.x), h.max(p.x)));
    if hi - lo <= PI {
        return Err(AnalysisError::Underdetermined("phases must span more than pi".into()));
    }
    let mut normal = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for p in points {
        let w = p.sigma.powi(-2);
        let row = Vector2::new(p.x.cos(), p.x.sin());
        normal += row * row.transpose() * w;
        rhs += row * (w * p.y);
    }
    let scale = normal.trace();
    if normal.determinant().abs() <= 1e-12 * scale * scale {
        return Err(AnalysisError::Degenerate("fringe design matrix is singular"));
    }
    let inverse = normal.try_inverse().ok_or(AnalysisError::Degenerate("fringe design matrix is singular"))?;
    let cs = inverse * rhs;
    let (c, s) = (cs[0], cs[1]);
    let v = c.hypot(s);
    let phi0 = if v > 0.0 { s.atan2(c).rem_euclid(2.0 * PI) } else { 0.0 };
    let chi2 = fringe_residual(points, v, phi0);
    let dof = points.len() - 2;
    let cov = inverse * (chi2 / dof as f64);
    let (sv, sphi) = if v > 0.0 {
        let gv = Vector2::new(c / v, s / v);
        let gp = Vector2::new(-s / (v * v), c / (v * v));
        ((gv.transpose() * cov * gv)[0].sqrt(), (gp.transpose() * cov * gp)[0].sqrt())
    } else {
        (cov[(0, 0)].sqrt(), f64::NAN)
    };
    Ok(FitResult {
        params: vec![param("V", v, sv), param("phi0", phi0, sphi)],
        residual_norm: chi2.sqrt(),
        degrees_of_freedom: dof,
        iterations: 1,
        converged: true,
    })
}

/// Heating curve `a e^{-t/tau} - b e^{-t/eta} + n_init` without clamping.
pub fn heating_curve(h: &HeatingParams, n_init: f64, t: f64) -> f64 {
    h.a * (-t / h.tau).exp() - h.b * (-t / h.eta_rise).exp() + n_init
}

/// Internal parameter vector: `a, b, ln tau, ln eta` and optionally `n_init`.
struct HeatingModel<'a> {
    points: &'a [FitPoint],
    fixed_n_init: Option<f64>,
}

impl HeatingModel<'_> {
    fn n_params(&self) -> usize {
        if self.fixed_n_init.is_some() {
            4
        } else {
            5
        }
    }

    fn unpack(&self, theta: &DVector<f64>) -> (HeatingParams, f64) {
        let h = HeatingParams {
            a: theta[0],
            b: theta[1],
            tau: theta[2].exp(),
            eta_rise: theta[3].exp(),
        };
        (h, self.fixed_n_init.unwrap_or_else(|| theta[4]))
    }

    fn chi2(&self, theta: &DVector<f64>) -> f64 {
        let (h, n0) = self.unpack(theta);
        self.points
            .iter()
            .map(|p| ((p.y - heating_curve(&h, n0, p.x)) / p.sigma).powi(2))
            .sum()
    }

    /// Weighted residuals and their Jacobian with respect to theta.
    fn linearize(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (h, n0) = self.unpack(theta);
        let m = self.points.len();
        let mut r = DVector::zeros(m);
        let mut j = DMatrix::zeros(m, self.n_params());
        for (k, p) in self.points.iter().enumerate() {
            let et = (-p.x / h.tau).exp();
            let ee = (-p.x / h.eta_rise).exp();
            r[k] = (p.y - heating_curve(&h, n0, p.x)) / p.sigma;
            let grad = [et, -ee, h.a * et * p.x / h.tau, -h.b * ee * p.x / h.eta_rise, 1.0];
            for c in 0..self.n_params() {
                j[(k, c)] = -grad[c] / p.sigma;
            }
        }
        (r, j)
    }

    /// Best linear amplitudes for fixed time constants; returns theta and chi2.
    fn project(&self, tau: f64, eta: f64) -> Option<(DVector<f64>, f64)> {
        let cols = if self.fixed_n_init.is_some() { 2 } else { 3 };
        let m = self.points.len();
        let mut a = DMatrix::zeros(m, cols);
        let mut y = DVector::zeros(m);
        for (k, p) in self.points.iter().enumerate() {
            let w = 1.0 / p.sigma;
            a[(k, 0)] = (-p.x / tau).exp() * w;
            a[(k, 1)] = -(-p.x / eta).exp() * w;
            if cols == 3 {
                a[(k, 2)] = w;
            }
            y[k] = (p.y - self.fixed_n_init.unwrap_or(0.0)) * w;
        }
        let sol = (a.transpose() * &a).cholesky()?.solve(&(a.transpose() * y));
        let mut theta = DVector::zeros(self.n_params());
        theta[0] = sol[0];
        theta[1] = sol[1];
        theta[2] = tau.ln();
        theta[3] = eta.ln();
        if cols == 3 {
            theta[4] = sol[2];
        }
        let chi2 = self.chi2(&theta);
        Some((theta, chi2))
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp())
}

/// Fits the double-exponential heating curve by damped Gauss-Newton
/// (Levenberg-Marquardt) iterations, started from the best point of a grid
/// over the two time constants with the amplitudes solved linearly.
/// The result is ordered so that `tau > eta`.
pub fn fit_heating(points: &[FitPoint], fixed_n_init: Option<f64>) -> Result<FitResult, AnalysisError> {
    check_points(points, 6)?;
    let t_max = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let t_min = points
        .iter()
        .map(|p| p.x)
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !t_min.is_finite() || t_max < 3.0 * t_min {
        return Err(AnalysisError::Underdetermined(
            "delays must span at least a factor of three".into(),
        ));
    }
    let model = HeatingModel { points, fixed_n_init };

    let mut best: Option<(DVector<f64>, f64)> = None;
    for tau in log_space(t_min, 10.0 * t_max, 40) {
        for eta in log_space(t_min / 20.0, tau, 30).filter(|&e| e < tau * 0.999) {
            if let Some((theta, chi2)) = model.project(tau, eta) {
                if best.as_ref().is_none_or(|(_, c)| chi2 < *c) {
                    best = Some((theta, chi2));
                }
            }
        }
    }
    let (mut theta, mut chi2) = best.ok_or(AnalysisError::Degenerate("no admissible starting point"))?;

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if chi2 <= f64::MIN_POSITIVE {
            converged = true;
            break;
        }
        let (r, j) = model.linearize(&theta);
        let jtj = j.transpose() * &j;
        let grad = j.transpose() * r;
        let mut accepted = false;
        while lambda < 1e20 {
            let mut damped = jtj.clone();
            let peak = jtj.diagonal().max();
            for d in 0..damped.nrows() {
                damped[(d, d)] += lambda * (jtj[(d, d)] + 1e-12 * peak);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &theta + step;
            let trial_chi2 = model.chi2(&trial);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let change = (chi2 - trial_chi2) / chi2;
                theta = trial;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if change < RELATIVE_TOLERANCE {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    if theta[3] > theta[2] {
        // swap the exponentials: a e^{-t/tau} - b e^{-t/eta} is symmetric
        // under (a, tau) <-> (-b, eta)
        let (a, b) = (theta[0], theta[1]);
        theta[0] = -b;
        theta[1] = -a;
        theta.swap_rows(2, 3);
    }

    let (h, n0) = model.unpack(&theta);
    let dof = points.len().saturating_sub(model.n_params());
    let (_, j) = model.linearize(&theta);
    let scale = if dof > 0 { chi2 / dof as f64 } else { f64::NAN };
    let cov = (j.transpose() * &j).try_inverse().map(|c| c * scale);
    let sd = |k: usize| cov.as_ref().map_or(f64::NAN, |c| c[(k, k)].max(0.0).sqrt());
    let mut params = vec![
        param("a", h.a, sd(0)),
        param("b", h.b, sd(1)),
        param("tau", h.tau, h.tau * sd(2)),
        param("eta", h.eta_rise, h.eta_rise * sd(3)),
    ];
    params.push(match fixed_n_init {
        Some(n) => param("n_init", n, f64::NAN),
        None => param("n_init", n0, sd(4)),
    });
    let result = FitResult {
        params,
        residual_norm: chi2.sqrt(),
        degrees_of_freedom: dof,
        iterations,
        converged,
    };
    if converged {
        Ok(result)
    } else {
        Err(AnalysisError::NotConverged(Box::new(result)))
    }
}

/// Heating parameters of a converged fit.
pub fn heating_params(fit: &FitResult) -> Option<(HeatingParams, f64)> {
    Some((
        HeatingParams {
            a: fit.get("a")?,
            b: fit.get("b")?,
            tau: fit.get("tau")?,
            eta_rise: fit.get("eta")?,
        },
        fit.get("n_init")?,
    ))
}

/// Parameters of the bundled synthetic heating measurement.
pub const SYNTHETIC_HEATING: HeatingParams = HeatingParams {
    a: 0.5,
    b: 0.45,
    tau: 3.3e-6,
    eta_rise: 0.35e-6,
};
pub const SYNTHETIC_N_INIT: f64 = 0.07;
/// Expected red-sideband counts per phonon at each delay.
pub const SYNTHETIC_COUNTS_PER_PHONON: f64 = 4_000.0;
pub const SYNTHETIC_SEED: u64 = 3300;

/// Delays of the synthetic pump-probe scan, in seconds.
pub fn synthetic_delays() -> Vec<f64> {
    [
        0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.3, 1.6, 2.0, 2.5, 3.0, 4.0, 5.0, 6.5, 8.0, 10.0, 12.0, 15.0,
    ]
    .iter()
    .map(|us| us * 1e-6)
    .collect()
}

/// Pump-probe scan with Poisson sideband counts: at each delay the blue and
/// red counts have means `k (n + 1)` and `k n`, and the occupation is
/// estimated by sideband asymmetry with its Poisson error.
pub fn synthetic_heating_points(
    h: &HeatingParams,
    n_init: f64,
    delays: &[f64],
    counts_per_phonon: f64,
    seed: u64,
) -> Result<Vec<FitPoint>, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |mean: f64| -> Result<u64, AnalysisError> {
        if mean <= 0.0 {
            return Ok(0);
        }
        let d = Poisson::new(mean).map_err(|e| AnalysisError::Inconsistent(e.to_string()))?;
        Ok(d.sample(&mut rng) as u64)
    };
    delays
        .iter()
        .map(|&t| {
            let n = heating_curve(h, n_init, t).max(0.0);
            let c_b = draw(counts_per_phonon * (n + 1.0))?;
            let c_r = draw(counts_per_phonon * n)?;
            Ok(FitPoint::new(t, sideband_occupancy(c_b, c_r)?, sideband_occupancy_error(c_b, c_r)?))
        })
        .collect()
}

/// Noiseless samples of the heating curve with unit weights.
pub fn exact_heating_points(h: &HeatingParams, n_init: f64, delays: &[f64]) -> Vec<FitPoint> {
    delays
        .iter()
        .map(|&t| FitPoint::new(t, heating_curve(h, n_init, t), 1.0))
        .collect()
}

pub fn write_points<W: Write>(mut out: W, points: &[FitPoint]) -> Result<(), AnalysisError> {
    writeln!(out, "{POINTS_HEADER}")?;
    for p in points {
        writeln!(out, "{:e},{:e},{:e}", p.x, p.y, p.sigma)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `x,y,sigma` rows; the header line, blank lines and `#` comments
/// are skipped.
pub fn read_points<R: BufRead>(input: R) -> Result<Vec<FitPoint>, AnalysisError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == POINTS_HEADER {
            continue;
        }
        let bad = |reason: &str| AnalysisError::Format {
            line: i + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad("expected x,y,sigma"));
        }
        let v: Vec<f64> = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<_, _>>()?;
        out.push(FitPoint::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fringe(v: f64, phi0: f64, n: usize) -> Vec<FitPoint> {
        (0..n)
            .map(|k| {
                let x = 2.0 * PI * k as f64 / n as f64;
                FitPoint::new(x, v * (x - phi0).cos(), 0.02)
            })
            .collect()
    }

    #[test]
    fn noiseless_fringe_is_exact() {
        let phi0 = 0.337 * PI;
        let fit = fit_visibility(&fringe(0.8, phi0, 12)).unwrap();
        assert!((fit.get("V").unwrap() - 0.8).abs() < 1e-9);
        assert!((fit.get("phi0").unwrap() - phi0).abs() < 1e-9);
        assert!(fit.residual_norm < 1e-9);
    }

    #[test]
    fn flat_fringe_has_zero_visibility() {
        let fit = fit_visibility(&fringe(0.0, 1.0, 8)).unwrap();
        assert_eq!(fit.get("V").unwrap(), 0.0);
    }

    #[test]
    fn fringe_preconditions() {
        assert!(fit_visibility(&fringe(0.8, 1.0, 12)[..3]).is_err());
        let narrow: Vec<FitPoint> = (0..6).map(|k| FitPoint::new(0.1 * k as f64, 0.5, 0.1)).collect();
        assert!(fit_visibility(&narrow).is_err());
    }

    #[test]
    fn noiseless_heating_recovery() {
        let pts = exact_heating_points(&SYNTHETIC_HEATING, SYNTHETIC_N_INIT, &synthetic_delays());
        let fit = fit_heating(&pts, None).unwrap();
        let (h, n0) = heating_params(&fit).unwrap();
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        assert!(rel(h.tau, 3.3e-6) < 1e-4, "{fit:?}");
        assert!(rel(h.eta_rise, 0.35e-6) < 1e-4);
        assert!(rel(h.a, 0.5) < 1e-4 && rel(h.b, 0.45) < 1e-4 && rel(n0, 0.07) < 1e-4);
    }

    #[test]
    fn heating_preconditions() {
        let pts = exact_heating_points(&SYNTHETIC_HEATING, 0.07, &synthetic_delays());
        assert!(fit_heating(&pts[..5], None).is_err());
        let narrow: Vec<FitPoint> = (1..8).map(|k| FitPoint::new(1e-6 + 1e-8 * k as f64, 0.1, 0.01)).collect();
        assert!(fit_heating(&narrow, None).is_err());
    }

    #[test]
    fn points_round_trip() {
        let pts = vec![FitPoint::new(2e-7, 0.287, 0.01), FitPoint::new(1e-6, -0.5, 0.25)];
        let mut buf = Vec::new();
        write_points(&mut buf, &pts).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), pts);
        assert!(read_points("1,2\n".as_bytes()).is_err());
    }
}
