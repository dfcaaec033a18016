//! Correlation coefficients, the CHSH parameter and their distributions.
//!
//! The same-port and cross-port coincidence numbers of a setting are modeled
//! as independent binomials with `N = trials` and `p = observed / trials`.
//! The correlation coefficient distribution is accumulated on a grid of
//! [`E_GRID_NODES`] nodes over `[-1, 1]`; the CHSH distribution is the
//! convolution of four such grids, the last one reflected.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, CoincidenceTable};

/// Nodes of the correlation-coefficient grid on `[-1, 1]`.
pub const E_GRID_NODES: usize = 4096;

/// Binomial supports are truncated this many standard deviations from the mean.
pub const SUPPORT_SIGMAS: f64 = 6.0;

/// Lower and upper quantiles of the reported interval.
pub const CI_QUANTILES: (f64, f64) = (0.16, 0.84);

/// Sign pattern of the CHSH combination over settings (1,1), (1,2), (2,1), (2,2).
pub const CHSH_SIGNS: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

pub fn correlation_coefficient(table: &CoincidenceTable) -> Result<f64, AnalysisError> {
    let same = table.same() as f64;
    let diff = table.different() as f64;
    if table.coincidences() == 0 {
        return Err(AnalysisError::Undefined("no coincidences"));
    }
    Ok((same - diff) / (same + diff))
}

/// `|E11 + E12 + E21 - E22|`.
pub fn chsh_point(e: [f64; 4]) -> f64 {
    (e[0] + e[1] + e[2] - e[3]).abs()
}

/// Probability masses on the uniform grid `lo, lo + step, ..., hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionGrid {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl DistributionGrid {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Point mass on the node nearest to `x`.
    pub fn point_mass(lo: f64, hi: f64, nodes: usize, x: f64) -> Self {
        let mut values = vec![0.0; nodes];
        let step = (hi - lo) / (nodes - 1) as f64;
        let i = (((x - lo) / step).round().max(0.0) as usize).min(nodes - 1);
        values[i] = 1.0;
        Self { lo, hi, values }
    }

    /// Mirror image `x -> -x`; requires a support symmetric about zero.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            lo: -self.hi,
            hi: -self.lo,
            values,
        }
    }

    pub fn expectation(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, p)| p * self.node(i)).sum()
    }

    /// Smallest node whose cumulative mass reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (i, p) in self.values.iter().enumerate() {
            acc += p;
            if acc >= q {
                return self.node(i);
            }
        }
        self.hi
    }
}

/// Binomial(`n`, `k / n`) masses on `lo..=hi` around the mean, truncated at
/// [`SUPPORT_SIGMAS`] and renormalized. Built by the ratio recurrence from the
/// mode, which stays accurate for `n` in the billions where log-gamma
/// differences lose most of their digits.
pub(crate) fn binomial_support(n: u64, k: u64) -> (u64, Vec<f64>) {
    if k == 0 || k == n {
        return (k, vec![1.0]);
    }
    let p = k as f64 / n as f64;
    let mean = k as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let lo = (mean - SUPPORT_SIGMAS * sd).floor().max(0.0) as u64;
    let hi = ((mean + SUPPORT_SIGMAS * sd).ceil() as u64).min(n);
    let odds = p / (1.0 - p);
    let len = (hi - lo + 1) as usize;
    let mut w = vec![0.0; len];
    let mode = (k - lo) as usize;
    w[mode] = 1.0;
    for j in mode + 1..len {
        let x = lo + j as u64 - 1;
        w[j] = w[j - 1] * odds * (n - x) as f64 / (x + 1) as f64;
    }
    for j in (0..mode).rev() {
        let x = lo + j as u64 + 1;
        w[j] = w[j + 1] / odds * x as f64 / (n - x + 1) as f64;
    }
    let total: f64 = w.iter().sum();
    (lo, w.into_iter().map(|v| v / total).collect())
}

/// [`e_distribution_on`] with the standard grid.
pub fn e_distribution(table: &CoincidenceTable) -> Result<DistributionGrid, AnalysisError> {
    e_distribution_on(table, E_GRID_NODES)
}

/// Distribution of `(X - Y) / (X + Y)` for independent binomial same-port
/// (`X`) and cross-port (`Y`) counts, on `nodes` grid points over `[-1, 1]`.
///
/// Each outcome goes to its nearest node, ties upwards. For fixed `x` the
/// coefficient decreases in `y`, so node `i` or above is reached exactly when
/// `y (2i - 1) <= x (2m + 1 - 2i)` with `m = nodes - 1`; the masses follow
/// from the cumulative distribution of `Y` at those integer thresholds.
/// The mass of `X + Y = 0` is dropped and the rest renormalized.
pub fn e_distribution_on(table: &CoincidenceTable, nodes: usize) -> Result<DistributionGrid, AnalysisError> {
    if table.trials == 0 {
        return Err(AnalysisError::Undefined("zero trials"));
    }
    if table.coincidences() == 0 {
        return Err(AnalysisError::Undefined("no coincidences"));
    }
    if nodes < 2 {
        return Err(AnalysisError::Inconsistent("grid needs at least two nodes".into()));
    }
    let (x_lo, px) = binomial_support(table.trials, table.same());
    let (y_lo, py) = binomial_support(table.trials, table.different());
    // cdf[j] = P(Y < y_lo + j)
    let mut cdf = Vec::with_capacity(py.len() + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for p in &py {
        acc += p;
        cdf.push(acc);
    }
    let y_hi = y_lo + py.len() as u64 - 1;
    let mass_below = |y: i128| -> f64 {
        // P(Y <= y)
        if y < y_lo as i128 {
            0.0
        } else if y >= y_hi as i128 {
            cdf[py.len()]
        } else {
            cdf[(y - y_lo as i128 + 1) as usize]
        }
    };

    let m = (nodes - 1) as i128;
    let mut values = vec![0.0; nodes];
    for (jx, &wx) in px.iter().enumerate() {
        let x = (x_lo + jx as u64) as i128;
        if x == 0 {
            // every y > 0 gives -1; (0, 0) is dropped
            let zero = if y_lo == 0 { py[0] } else { 0.0 };
            values[0] += wx * (cdf[py.len()] - zero);
            continue;
        }
        let threshold = |i: i128| (x * (2 * m + 1 - 2 * i)).div_euclid(2 * i - 1);
        // nodes below the first threshold under the top of the support get
        // no mass from this x; skip them by bisection
        let (mut a, mut b) = (1i128, m + 1);
        while a < b {
            let mid = (a + b) / 2;
            if threshold(mid) < y_hi as i128 {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        // upper = P(Y <= threshold of the previous node)
        let mut upper = cdf[py.len()];
        for i in a..nodes as i128 {
            let below = mass_below(threshold(i));
            values[(i - 1) as usize] += wx * (upper - below);
            upper = below;
            if below == 0.0 {
                break;
            }
        }
        values[nodes - 1] += wx * upper;
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(AnalysisError::Undefined("no mass with coincidences"));
    }
    for v in &mut values {
        *v /= total;
    }
    Ok(DistributionGrid {
        lo: -1.0,
        hi: 1.0,
        values,
    })
}

fn convolve(a: &DistributionGrid, b: &DistributionGrid) -> Result<DistributionGrid, AnalysisError> {
    let (sa, sb) = (a.step(), b.step());
    if ((sa - sb) / sa).abs() > 1e-12 {
        return Err(AnalysisError::Inconsistent("grid spacings differ".into()));
    }
    let mut values = vec![0.0; a.values.len() + b.values.len() - 1];
    for (i, &pa) in a.values.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (j, &pb) in b.values.iter().enumerate() {
            values[i + j] += pa * pb;
        }
    }
    Ok(DistributionGrid {
        lo: a.lo + b.lo,
        hi: a.hi + b.hi,
        values,
    })
}

/// Distribution of `E11 + E12 + E21 - E22` by direct convolution. On
/// standard grids the result has `4 (E_GRID_NODES - 1) + 1` nodes over
/// `[-4, 4]`, sharing the input spacing.
pub fn s_distribution(grids: &[DistributionGrid; 4]) -> Result<DistributionGrid, AnalysisError> {
    for g in grids {
        if (g.total() - 1.0).abs() > 1e-9 {
            return Err(AnalysisError::Inconsistent("grid is not normalized".into()));
        }
        if g.values.len() != grids[0].values.len() || g.lo != grids[0].lo || g.hi != grids[0].hi {
            return Err(AnalysisError::Inconsistent("grids differ in shape".into()));
        }
    }
    let signed: Vec<DistributionGrid> = grids
        .iter()
        .zip(CHSH_SIGNS)
        .map(|(g, s)| if s < 0.0 { g.reflected() } else { g.clone() })
        .collect();
    let mut out = convolve(&signed[0], &signed[1])?;
    out = convolve(&out, &signed[2])?;
    out = convolve(&out, &signed[3])?;
    let total = out.total();
    for v in &mut out.values {
        *v /= total;
    }
    Ok(out)
}

/// Expectation and the [`CI_QUANTILES`] interval of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub expectation: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Summary {
    pub fn minus(&self) -> f64 {
        self.ci_lo - self.expectation
    }

    pub fn plus(&self) -> f64 {
        self.ci_hi - self.expectation
    }
}

pub fn summarize_distribution(grid: &DistributionGrid) -> Summary {
    Summary {
        expectation: grid.expectation(),
        ci_lo: grid.quantile(CI_QUANTILES.0),
        ci_hi: grid.quantile(CI_QUANTILES.1),
    }
}

/// Per-setting correlation estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub setting: (u8, u8),
    pub point: f64,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub correlations: [CorrelationEstimate; 4],
    pub s_point: f64,
    pub s_expected: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Distance of the expectation above 2 in units of the lower half-width;
    /// `None` for a zero-width interval.
    pub sigma_violation: Option<f64>,
}

/// Full pipeline on the four settings in the order (1,1), (1,2), (2,1), (2,2).
pub fn chsh_analysis(tables: &[CoincidenceTable; 4]) -> Result<ChshResult, AnalysisError> {
    const LABELS: [(u8, u8); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];
    let mut grids = Vec::with_capacity(4);
    let mut correlations = Vec::with_capacity(4);
    for (t, setting) in tables.iter().zip(LABELS) {
        let g = e_distribution(t)?;
        correlations.push(CorrelationEstimate {
            setting,
            point: correlation_coefficient(t)?,
            summary: summarize_distribution(&g),
        });
        grids.push(g);
    }
    let grids: [DistributionGrid; 4] = grids.try_into().expect("four grids");
    let s = summarize_distribution(&s_distribution(&grids)?);
    let points: Vec<f64> = correlations.iter().map(|c| c.point).collect();
    let lower = s.expectation - s.ci_lo;
    Ok(ChshResult {
        correlations: correlations.try_into().expect("four settings"),
        s_point: chsh_point([points[0], points[1], points[2], points[3]]),
        s_expected: s.expectation,
        ci_lo: s.ci_lo,
        ci_hi: s.ci_hi,
        sigma_violation: (lower > 0.0).then(|| (s.expectation - 2.0) / lower),
    })
}
