use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::OutcomeDistribution;
use crate::sampler::{OutcomeCounts, RecordFile};

use super::AnalysisError;

pub const COUNTS_HEADER: &str = "optobell-counts v1";

/// Heralded coincidence counts of one phase setting. `n[i][j]` counts trials
/// with exactly one blue click, on detector `i + 1`, and exactly one red
/// click, on detector `j + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceTable {
    pub n: [[u64; 2]; 2],
    /// Trials with exactly one blue click.
    pub heralds: u64,
    pub trials: u64,
    /// Trials with both blue detectors clicking; never heralds.
    pub blue_doubles: u64,
    /// Heralded trials with both red detectors clicking; never coincidences.
    pub red_doubles: u64,
}

impl CoincidenceTable {
    /// Table with detector indices starting at 1: `n11, n12, n21, n22`.
    pub fn from_counts(n11: u64, n12: u64, n21: u64, n22: u64, heralds: u64, trials: u64) -> Self {
        Self {
            n: [[n11, n12], [n21, n22]],
            heralds,
            trials,
            ..Self::default()
        }
    }

    pub fn same(&self) -> u64 {
        self.n[0][0] + self.n[1][1]
    }

    pub fn different(&self) -> u64 {
        self.n[0][1] + self.n[1][0]
    }

    pub fn coincidences(&self) -> u64 {
        self.same() + self.different()
    }

    /// Same table with the red detector labels exchanged.
    pub fn swap_red(&self) -> Self {
        let [[a, b], [c, d]] = self.n;
        Self {
            n: [[b, a], [d, c]],
            ..*self
        }
    }

    /// Multiplies every count by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self {
            n: self.n.map(|row| row.map(|v| v * k)),
            heralds: self.heralds * k,
            trials: self.trials * k,
            blue_doubles: self.blue_doubles * k,
            red_doubles: self.red_doubles * k,
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.coincidences() > self.heralds || self.heralds > self.trials {
            return Err(AnalysisError::Inconsistent(format!(
                "need coincidences <= heralds <= trials, got {} / {} / {}",
                self.coincidences(),
                self.heralds,
                self.trials
            )));
        }
        Ok(())
    }
}

/// Applies the exactly-one-click rule to every record.
pub fn count_coincidences(file: &RecordFile) -> CoincidenceTable {
    let mut t = CoincidenceTable {
        trials: file.trials,
        ..CoincidenceTable::default()
    };
    for r in &file.records {
        let blue = match r.blue_clicks {
            [true, true] => {
                t.blue_doubles += 1;
                continue;
            }
            [true, false] => 0,
            [false, true] => 1,
            [false, false] => continue,
        };
        t.heralds += 1;
        match r.red_clicks {
            [true, false] => t.n[blue][0] += 1,
            [false, true] => t.n[blue][1] += 1,
            [true, true] => t.red_doubles += 1,
            [false, false] => {}
        }
    }
    t
}

/// [`count_coincidences`] applied to an outcome histogram.
pub fn coincidences_from_histogram(h: &OutcomeCounts) -> CoincidenceTable {
    let mut t = CoincidenceTable {
        trials: h.total(),
        ..CoincidenceTable::default()
    };
    for (k, &n) in h.0.iter().enumerate() {
        let (blue, red) = OutcomeDistribution::decode(k);
        let b = match blue {
            [true, true] => {
                t.blue_doubles += n;
                continue;
            }
            [true, false] => 0,
            [false, true] => 1,
            [false, false] => continue,
        };
        t.heralds += n;
        match red {
            [true, false] => t.n[b][0] += n,
            [false, true] => t.n[b][1] += n,
            [true, true] => t.red_doubles += n,
            [false, false] => {}
        }
    }
    t
}

/// Window singles of one measurement: trials with at least one click in the
/// blue window, in the red window, and in both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinglesTable {
    pub trials: u64,
    pub blue: u64,
    pub red: u64,
    pub both: u64,
}

/// [`count_singles`] applied to an outcome histogram.
pub fn singles_from_histogram(h: &OutcomeCounts) -> SinglesTable {
    let mut t = SinglesTable {
        trials: h.total(),
        ..SinglesTable::default()
    };
    for (k, &n) in h.0.iter().enumerate() {
        let (blue, red) = OutcomeDistribution::decode(k);
        let b = blue.iter().any(|&c| c);
        let r = red.iter().any(|&c| c);
        t.blue += if b { n } else { 0 };
        t.red += if r { n } else { 0 };
        t.both += if b && r { n } else { 0 };
    }
    t
}

pub fn count_singles(file: &RecordFile) -> SinglesTable {
    let mut t = SinglesTable {
        trials: file.trials,
        ..SinglesTable::default()
    };
    for r in &file.records {
        let b = r.blue_clicks.iter().any(|&c| c);
        let red = r.red_clicks.iter().any(|&c| c);
        t.blue += b as u64;
        t.red += red as u64;
        t.both += (b && red) as u64;
    }
    t
}

/// One row of a counts file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub setting: (u8, u8),
    pub table: CoincidenceTable,
}

pub fn write_counts<W: Write>(mut out: W, rows: &[SettingCounts]) -> Result<(), AnalysisError> {
    writeln!(out, "{COUNTS_HEADER}")?;
    for r in rows {
        let t = &r.table;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.setting.0, r.setting.1, t.trials, t.heralds, t.n[0][0], t.n[0][1], t.n[1][0], t.n[1][1]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a counts file; blank lines and `#` comments are skipped.
pub fn read_counts<R: BufRead>(input: R) -> Result<Vec<SettingCounts>, AnalysisError> {
    let bad = |line: usize, reason: &str| AnalysisError::Format {
        line,
        reason: reason.to_string(),
    };
    let mut lines = input.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim_end) != Some(COUNTS_HEADER) {
        return Err(bad(1, "missing header"));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(bad(n, "expected 8 fields"));
        }
        let mut v = [0u64; 8];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| bad(n, "bad integer"))?;
        }
        let label = |x: u64| u8::try_from(x).map_err(|_| bad(n, "bad setting index"));
        let table = CoincidenceTable::from_counts(v[4], v[5], v[6], v[7], v[3], v[2]);
        table.validate().map_err(|e| bad(n, &e.to_string()))?;
        rows.push(SettingCounts {
            setting: (label(v[0])?, label(v[1])?),
            table,
        });
    }
    Ok(rows)
}
