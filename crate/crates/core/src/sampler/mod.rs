//! Reproducible per-trial sampling of joint click outcomes.
//!
//! Every trial draws exactly one 64-bit word from a ChaCha8 stream keyed by
//! `(seed, stream)`, at word position `trial`. The outcome of a trial is
//! therefore a pure function of `(seed, stream, trial)`, and any split of the
//! trial range across workers reproduces the serial result.

mod records;

pub use records::{read_records, write_records, ClickRecord, RecordFile, RECORD_HEADER};

use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{OutcomeDistribution, OUTCOMES};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("outcome distribution is not normalized (total {0})")]
    Unnormalized(f64),
    #[error("record file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Key of an independent random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    fn rng_at(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        // one u64 = two 32-bit words per trial
        rng.set_word_pos(2 * trial as u128);
        rng
    }
}

/// Outcome histogram, indexed like [`OutcomeDistribution`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts(pub [u64; OUTCOMES]);

impl OutcomeCounts {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn merge(&mut self, other: &OutcomeCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

/// Inverse-CDF table over the 16 outcomes.
#[derive(Clone, Debug)]
pub struct OutcomeSampler {
    // strictly in units of 2^-53 so that comparisons are exact integer ones
    thresholds: [u64; OUTCOMES],
}

const UNIT: f64 = (1u64 << 53) as f64;

impl OutcomeSampler {
    pub fn new(dist: &OutcomeDistribution) -> Result<Self, SamplerError> {
        let total = dist.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SamplerError::Unnormalized(total));
        }
        let mut thresholds = [0u64; OUTCOMES];
        let mut acc = 0.0;
        for (t, p) in thresholds.iter_mut().zip(dist.probabilities()) {
            acc += p / total;
            *t = (acc * UNIT).round().min(UNIT) as u64;
        }
        // rounding may leave the top of the range uncovered; give it to the
        // last possible outcome, never to a trailing impossible one
        let last = dist.probabilities().iter().rposition(|&p| p > 0.0).unwrap_or(OUTCOMES - 1);
        thresholds[last..].fill(1u64 << 53);
        Ok(Self { thresholds })
    }

    /// Maps one raw 64-bit word to an outcome index.
    #[inline]
    pub fn outcome(&self, word: u64) -> usize {
        let u = word >> 11;
        // the no-click outcome dominates every realistic distribution
        if u < self.thresholds[0] {
            return 0;
        }
        let mut k = 1;
        while u >= self.thresholds[k] {
            k += 1;
        }
        k
    }

    /// Outcomes of the trials in `range`, fed to `visit` in order.
    pub fn for_each(&self, seed: SeedSpec, range: Range<u64>, mut visit: impl FnMut(u64, usize)) {
        if range.is_empty() {
            return;
        }
        let mut rng = seed.rng_at(range.start);
        for trial in range {
            visit(trial, self.outcome(rng.next_u64()));
        }
    }

    pub fn counts(&self, seed: SeedSpec, range: Range<u64>) -> OutcomeCounts {
        let mut h = [0u64; OUTCOMES];
        self.for_each(seed, range, |_, k| h[k] += 1);
        OutcomeCounts(h)
    }
}

/// Number of worker threads used by the parallel helpers.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn shards(n_trials: u64, workers: usize) -> Vec<Range<u64>> {
    let workers = workers.max(1) as u64;
    let step = n_trials.div_ceil(workers).max(1);
    (0..workers)
        .map(|w| (w * step).min(n_trials)..((w + 1) * step).min(n_trials))
        .filter(|r| !r.is_empty())
        .collect()
}

/// Multinomial draw of `n_trials` outcomes.
pub fn sample_counts(dist: &OutcomeDistribution, n_trials: u64, seed: SeedSpec) -> Result<OutcomeCounts, SamplerError> {
    sample_counts_sharded(dist, n_trials, seed, 1)
}

/// [`sample_counts`] split over `workers` threads; the result does not depend
/// on `workers`.
pub fn sample_counts_sharded(
    dist: &OutcomeDistribution,
    n_trials: u64,
    seed: SeedSpec,
    workers: usize,
) -> Result<OutcomeCounts, SamplerError> {
    let sampler = OutcomeSampler::new(dist)?;
    let parts = shards(n_trials, workers);
    if parts.len() <= 1 {
        return Ok(sampler.counts(seed, 0..n_trials));
    }
    let mut total = OutcomeCounts::default();
    std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .into_iter()
            .map(|r| {
                let sampler = &sampler;
                scope.spawn(move || sampler.counts(seed, r))
            })
            .collect();
        for h in handles {
            total.merge(&h.join().expect("sampling worker panicked"));
        }
    });
    Ok(total)
}

/// Non-empty trials as click records, in trial order.
pub fn sample_records(
    dist: &OutcomeDistribution,
    n_trials: u64,
    seed: SeedSpec,
    label: (u8, u8),
) -> Result<RecordFile, SamplerError> {
    sample_records_sharded(dist, n_trials, seed, label, 1)
}

/// [`sample_records`] split over `workers` threads and merged in trial order.
pub fn sample_records_sharded(
    dist: &OutcomeDistribution,
    n_trials: u64,
    seed: SeedSpec,
    label: (u8, u8),
    workers: usize,
) -> Result<RecordFile, SamplerError> {
    let sampler = OutcomeSampler::new(dist)?;
    let collect = |r: Range<u64>| {
        let mut out = Vec::new();
        sampler.for_each(seed, r, |trial, k| {
            if k != 0 {
                out.push(ClickRecord::from_outcome(trial, label, k));
            }
        });
        out
    };
    let parts = shards(n_trials, workers);
    let records = if parts.len() <= 1 {
        collect(0..n_trials)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = parts.into_iter().map(|r| scope.spawn(|| collect(r))).collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("sampling worker panicked"))
                .collect()
        })
    };
    Ok(RecordFile {
        records,
        trials: n_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> OutcomeDistribution {
        OutcomeDistribution::new([1.0 / 16.0; OUTCOMES]).unwrap()
    }

    #[test]
    fn point_mass() {
        let mut p = [0.0; OUTCOMES];
        p[5] = 1.0;
        let d = OutcomeDistribution::new(p).unwrap();
        let c = sample_counts(&d, 1000, SeedSpec::new(1, 0)).unwrap();
        assert_eq!(c.0[5], 1000);
        assert_eq!(c.total(), 1000);
    }

    #[test]
    fn shards_cover_range() {
        for (n, w) in [(0, 3), (1, 4), (10, 3), (100, 1), (7, 7)] {
            let s = shards(n, w);
            assert_eq!(s.iter().map(|r| r.end - r.start).sum::<u64>(), n);
            for pair in s.windows(2) {
                assert_eq!(pair[0].end, pair[1].start);
            }
        }
    }

    #[test]
    fn sharding_does_not_change_counts() {
        let seed = SeedSpec::new(7, 3);
        let serial = sample_counts(&uniform(), 10_001, seed).unwrap();
        for w in [2, 3, 8] {
            assert_eq!(sample_counts_sharded(&uniform(), 10_001, seed, w).unwrap(), serial);
        }
    }

    #[test]
    fn streams_differ() {
        let a = sample_counts(&uniform(), 1000, SeedSpec::new(7, 0)).unwrap();
        let b = sample_counts(&uniform(), 1000, SeedSpec::new(7, 1)).unwrap();
        assert_ne!(a, b);
    }
}
