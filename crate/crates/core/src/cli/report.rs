use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    ChshResult, CorrelationEstimate, CrossCorrelation, FitResult, PredictedVisibility, SettingCounts,
};
use crate::model::ExperimentConfig;

/// Everything needed to re-run a command and check its output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    /// Digests of every input read by the command, in argument order.
    #[serde(default)]
    pub inputs: Vec<InputDigest>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

/// Cross-correlation of one single-device measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelationReport {
    pub source: String,
    pub cross_correlation: CrossCorrelation,
    pub predicted: PredictedVisibility,
}

/// Sideband-asymmetry occupation of one thermometry measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub source: String,
    pub c_b: u64,
    pub c_r: u64,
    pub trials: u64,
    pub occupancy: f64,
    pub error: f64,
}

/// Structured result of one command. Serializes to JSON without loss.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub config: Option<ExperimentConfig>,
    #[serde(default)]
    pub tables: Vec<SettingCounts>,
    /// Per-setting estimates that are not part of a CHSH combination.
    #[serde(default)]
    pub correlations: Vec<CorrelationEstimate>,
    #[serde(default)]
    pub chsh: Option<ChshResult>,
    #[serde(default)]
    pub fit: Option<FitResult>,
    #[serde(default)]
    pub cross_correlations: Vec<CrossCorrelationReport>,
    #[serde(default)]
    pub occupancies: Vec<OccupancyReport>,
    /// Files written by the command.
    #[serde(default)]
    pub outputs: Vec<String>,
    /// Restricts the human-readable correlation table to one setting.
    #[serde(default)]
    pub selected_setting: Option<(u8, u8)>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            provenance: Provenance {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                ..Provenance::default()
            },
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports are always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Human-readable summary.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "optobell {} {}", self.provenance.tool_version, self.command);
        for d in &self.provenance.inputs {
            let _ = writeln!(s, "input    {}  sha256 {}", d.name, d.sha256);
        }
        if let Some(seed) = self.provenance.seed {
            let _ = writeln!(s, "seed     {seed}");
        }
        if let Some(n) = self.provenance.trials {
            let _ = writeln!(s, "trials   {n} per setting");
        }

        if !self.tables.is_empty() {
            let _ = writeln!(s, "\nsetting       trials   heralds   n11   n12   n21   n22");
            for row in &self.tables {
                let t = &row.table;
                let _ = writeln!(
                    s,
                    "({},{}) {:>14} {:>9} {:>5} {:>5} {:>5} {:>5}",
                    row.setting.0, row.setting.1, t.trials, t.heralds, t.n[0][0], t.n[0][1], t.n[1][0], t.n[1][1]
                );
            }
        }

        let mut rows: Vec<&CorrelationEstimate> = self.correlations.iter().collect();
        if let Some(c) = &self.chsh {
            rows.extend(c.correlations.iter());
        }
        if let Some(sel) = self.selected_setting {
            rows.retain(|r| r.setting == sel);
        }
        if !rows.is_empty() {
            let _ = writeln!(s, "\nsetting   E point   E expected        CI");
            for r in rows {
                let _ = writeln!(
                    s,
                    "({},{})  {:>9.5}  {:>9.5}  {:+.4}/{:+.4}",
                    r.setting.0,
                    r.setting.1,
                    r.point,
                    r.summary.expectation,
                    r.summary.minus(),
                    r.summary.plus()
                );
            }
        }

        if let Some(c) = &self.chsh {
            let _ = writeln!(s, "\nS point     {:.5}", c.s_point);
            let _ = writeln!(s, "S expected  {:.5}", c.s_expected);
            let _ = writeln!(
                s,
                "S CI        [{:.5}, {:.5}]  ({:+.4}/{:+.4})",
                c.ci_lo,
                c.ci_hi,
                c.ci_lo - c.s_expected,
                c.ci_hi - c.s_expected
            );
            match c.sigma_violation {
                Some(v) => {
                    let _ = writeln!(s, "violation   {v:.2} sigma");
                }
                None => {
                    let _ = writeln!(s, "violation   undefined (zero-width interval)");
                }
            }
        }

        if let Some(f) = &self.fit {
            let _ = writeln!(
                s,
                "\nfit {} after {} iterations, residual norm {:.4e}, dof {}",
                if f.converged { "converged" } else { "did NOT converge" },
                f.iterations,
                f.residual_norm,
                f.degrees_of_freedom
            );
            for p in &f.params {
                match p.uncertainty {
                    Some(u) => {
                        let _ = writeln!(s, "  {:<8} {:.6e} +- {:.2e}", p.name, p.value, u);
                    }
                    None => {
                        let _ = writeln!(s, "  {:<8} {:.6e}", p.name, p.value);
                    }
                }
            }
        }

        for g in &self.cross_correlations {
            let c = &g.cross_correlation;
            let _ = writeln!(
                s,
                "\n{}: g2 = {:.3} +- {:.3}  (C_b {}, C_r {}, both {}, trials {})",
                g.source, c.g2, c.g2_error, c.c_b, c.c_r, c.coincidences, c.trials
            );
            let _ = writeln!(
                s,
                "  predicted visibility {:.4}{}",
                g.predicted.visibility,
                if g.predicted.clamped { " (clamped)" } else { "" }
            );
        }

        for o in &self.occupancies {
            let _ = writeln!(
                s,
                "\n{}: n = {:.4} +- {:.4}  (C_b {}, C_r {}, trials {})",
                o.source, o.occupancy, o.error, o.c_b, o.c_r, o.trials
            );
        }

        if !self.outputs.is_empty() {
            let _ = writeln!(s);
            for o in &self.outputs {
                let _ = writeln!(s, "wrote {o}");
            }
        }
        s
    }
}
