#![allow(dead_code)]

use optobell::analysis::{CoincidenceTable, SUPPORT_SIGMAS};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

/// Pearson chi-square p-value of `counts` against `probs`. Outcomes expected
/// fewer than five times are pooled into one bin.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let n = n as f64;
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = n * p;
        if e < 5.0 {
            pool_obs += c as f64;
            pool_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        bins += 1;
    }
    let dof = (bins - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

/// Binomial(`n`, `k / n`) masses from statrs on the support kept by the
/// analysis: `mean +- SUPPORT_SIGMAS sd`, widened to integers, renormalized.
pub fn truncated_pmf(n: u64, k: u64) -> Vec<(u64, f64)> {
    if k == 0 || k == n {
        return vec![(k, 1.0)];
    }
    let p = k as f64 / n as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    let lo = (k as f64 - SUPPORT_SIGMAS * sd).floor().max(0.0) as u64;
    let hi = ((k as f64 + SUPPORT_SIGMAS * sd).ceil() as u64).min(n);
    let b = Binomial::new(p, n).unwrap();
    let w: Vec<(u64, f64)> = (lo..=hi).map(|x| (x, b.pmf(x))).collect();
    let total: f64 = w.iter().map(|(_, v)| v).sum();
    w.into_iter().map(|(x, v)| (x, v / total)).collect()
}

/// Enumerates every `(x, y)` pair; the nearest node of `(x - y) / (x + y)`
/// with ties upward is `floor((2 x m + x + y) / (2 (x + y)))`.
pub fn brute_force_e_distribution(table: &CoincidenceTable, nodes: usize) -> Vec<f64> {
    let m = (nodes - 1) as u64;
    let mut out = vec![0.0; nodes];
    for (x, px) in truncated_pmf(table.trials, table.same()) {
        for (y, py) in truncated_pmf(table.trials, table.different()) {
            if x + y == 0 {
                continue;
            }
            let i = (2 * x * m + x + y) / (2 * (x + y));
            out[i as usize] += px * py;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|v| v / total).collect()
}
