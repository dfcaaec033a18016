use std::io::{BufRead, Write};

use crate::model::OutcomeDistribution;

use super::SamplerError;

pub const RECORD_HEADER: &str = "optobell-clicks v1";
const TRAILER_PREFIX: &str = "#trials=";

/// One trial with at least one click. Detectors are numbered 1 and 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickRecord {
    pub trial_index: u64,
    pub setting_label: (u8, u8),
    pub blue_clicks: [bool; 2],
    pub red_clicks: [bool; 2],
}

impl ClickRecord {
    pub fn from_outcome(trial_index: u64, setting_label: (u8, u8), outcome: usize) -> Self {
        let (blue_clicks, red_clicks) = OutcomeDistribution::decode(outcome);
        Self {
            trial_index,
            setting_label,
            blue_clicks,
            red_clicks,
        }
    }

    pub fn outcome(&self) -> usize {
        OutcomeDistribution::outcome_index(self.blue_clicks, self.red_clicks)
    }
}

/// Sparse click records plus the number of trials they were drawn from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecordFile {
    pub records: Vec<ClickRecord>,
    pub trials: u64,
}

impl RecordFile {
    /// Full outcome histogram, with the elided empty trials restored.
    pub fn histogram(&self) -> super::OutcomeCounts {
        let mut h = [0u64; crate::model::OUTCOMES];
        for r in &self.records {
            h[r.outcome()] += 1;
        }
        h[0] += self.trials - self.records.len() as u64;
        super::OutcomeCounts(h)
    }
}

fn encode_set(clicks: [bool; 2]) -> &'static str {
    match clicks {
        [false, false] => "",
        [true, false] => "1",
        [false, true] => "2",
        [true, true] => "12",
    }
}

fn decode_set(field: &str) -> Option<[bool; 2]> {
    match field {
        "" => Some([false, false]),
        "1" => Some([true, false]),
        "2" => Some([false, true]),
        "12" => Some([true, true]),
        _ => None,
    }
}

pub fn write_records<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a ClickRecord>,
    trials: u64,
) -> Result<(), SamplerError> {
    writeln!(out, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.trial_index,
            r.setting_label.0,
            r.setting_label.1,
            encode_set(r.blue_clicks),
            encode_set(r.red_clicks)
        )?;
    }
    writeln!(out, "{TRAILER_PREFIX}{trials}")?;
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<RecordFile, SamplerError> {
    let bad = |line: usize, reason: &str| SamplerError::Format {
        line,
        reason: reason.to_string(),
    };
    let mut lines = input.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).transpose()?;
    if header.as_deref().map(str::trim_end) != Some(RECORD_HEADER) {
        return Err(bad(1, "missing header"));
    }
    let mut records: Vec<ClickRecord> = Vec::new();
    let mut trials = None;
    for (i, line) in lines {
        let n = i + 1;
        let line = line?;
        let line = line.trim_end();
        if trials.is_some() {
            if line.is_empty() {
                continue;
            }
            return Err(bad(n, "content after trailer"));
        }
        if let Some(count) = line.strip_prefix(TRAILER_PREFIX) {
            trials = Some(count.parse::<u64>().map_err(|_| bad(n, "bad trial count"))?);
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(n, "expected 5 fields"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad(n, "bad integer"));
        let trial_index = num(fields[0])?;
        let label = |s: &str| s.parse::<u8>().map_err(|_| bad(n, "bad setting index"));
        let setting_label = (label(fields[1])?, label(fields[2])?);
        let blue_clicks = decode_set(fields[3]).ok_or_else(|| bad(n, "bad detector set"))?;
        let red_clicks = decode_set(fields[4]).ok_or_else(|| bad(n, "bad detector set"))?;
        if let Some(prev) = records.last() {
            if trial_index <= prev.trial_index {
                return Err(bad(n, "trial indices must increase"));
            }
        }
        records.push(ClickRecord {
            trial_index,
            setting_label,
            blue_clicks,
            red_clicks,
        });
    }
    let trials = trials.ok_or_else(|| bad(0, "missing trailer"))?;
    if let Some(last) = records.last() {
        if last.trial_index >= trials {
            return Err(bad(0, "trial index beyond trial count"));
        }
    }
    Ok(RecordFile { records, trials })
}
