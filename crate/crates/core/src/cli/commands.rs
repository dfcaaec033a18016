use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use sha2::{Digest, Sha256};

use super::report::{CrossCorrelationReport, InputDigest, OccupancyReport, RunReport};
use super::CliError;
use crate::analysis::{
    chsh_analysis, coincidences_from_histogram, correlation_coefficient, count_coincidences, count_singles,
    cross_correlation, e_distribution, fit_heating, fit_visibility, predicted_visibility, read_counts, read_points,
    sideband_occupancy, sideband_occupancy_error, summarize_distribution, write_counts, AnalysisError,
    CoincidenceTable, CorrelationEstimate, FitPoint, SettingCounts, COUNTS_HEADER,
};
use crate::model::{Device, Experiment, ExperimentConfig, OutcomeDistribution, PhaseSetting};
use crate::sampler::{
    default_workers, read_records, sample_counts_sharded, sample_records_sharded, write_records, OutcomeCounts,
    RecordFile, SeedSpec, RECORD_HEADER,
};

/// Environment variable that points `reproduce` at another data directory.
pub const DATA_DIR_ENV: &str = "OPTOBELL_DATA_DIR";
pub const REFERENCE_COUNTS_FILE: &str = "table_s2.counts";
pub const REFERENCE_COUNTS_SHA256: &str = "7e6844b2e9ec540a277d37ba805b9abfd688c828b2a2c60a16166143d719bd62";
const EMBEDDED_REFERENCE_COUNTS: &str = include_str!("../../data/table_s2.counts");

/// `reproduce` exits with 0 only when the S expectation lands here.
pub const REPRODUCE_ACCEPT: RangeInclusive<f64> = 2.164..=2.184;

pub const CHSH_LABELS: [(u8, u8); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// ---------------------------------------------------------------- reproduce

/// Reference counts text and where it came from, after the hash check.
pub fn load_reference_counts() -> Result<(String, String), CliError> {
    let (text, origin) = match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => {
            let path = Path::new(&dir).join(REFERENCE_COUNTS_FILE);
            (read_text(&path)?, path.display().to_string())
        }
        None => (EMBEDDED_REFERENCE_COUNTS.to_string(), format!("embedded:{REFERENCE_COUNTS_FILE}")),
    };
    let found = sha256_hex(text.as_bytes());
    if found != REFERENCE_COUNTS_SHA256 {
        return Err(CliError::Corrupted {
            name: origin,
            expected: REFERENCE_COUNTS_SHA256.to_string(),
            found,
        });
    }
    Ok((text, origin))
}

/// CHSH pipeline on the reference dataset.
pub fn cmd_reproduce(setting: Option<(u8, u8)>) -> Result<RunReport, CliError> {
    let (text, origin) = load_reference_counts()?;
    reproduce_from(&text, &origin, setting)
}

/// CHSH pipeline on an arbitrary counts text, without the hash check.
pub fn reproduce_from(text: &str, origin: &str, setting: Option<(u8, u8)>) -> Result<RunReport, CliError> {
    if let Some(s) = setting {
        if !CHSH_LABELS.contains(&s) {
            return Err(CliError::Usage(format!("setting {},{} is not a CHSH setting", s.0, s.1)));
        }
    }
    let rows = read_counts(text.as_bytes()).map_err(|e| CliError::input(origin, e))?;
    let mut report = RunReport::new("reproduce");
    report.provenance.inputs.push(InputDigest {
        name: origin.to_string(),
        sha256: sha256_hex(text.as_bytes()),
    });
    report.chsh = Some(chsh_analysis(&chsh_tables(&rows)?)?);
    report.tables = rows;
    report.selected_setting = setting;
    Ok(report)
}

/// Orders rows as (1,1), (1,2), (2,1), (2,2); every label must appear once.
pub fn chsh_tables(rows: &[SettingCounts]) -> Result<[CoincidenceTable; 4], CliError> {
    let mut out = [None; 4];
    for r in rows {
        let Some(k) = CHSH_LABELS.iter().position(|&l| l == r.setting) else {
            return Err(CliError::Usage(format!(
                "setting {},{} is not a CHSH setting",
                r.setting.0, r.setting.1
            )));
        };
        if out[k].replace(r.table).is_some() {
            return Err(CliError::Usage(format!("setting {},{} given twice", r.setting.0, r.setting.1)));
        }
    }
    let missing: Vec<(u8, u8)> = CHSH_LABELS
        .iter()
        .zip(&out)
        .filter(|(_, t)| t.is_none())
        .map(|(&l, _)| l)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingSettings(missing));
    }
    Ok(out.map(|t| t.expect("checked above")))
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Measurement {
    /// The four CHSH settings (or those chosen with --setting).
    Chsh,
    /// Red-phase sweep over a full period, labels (0, k).
    Sweep,
    /// Device A alone, for the cross-correlation.
    #[value(name = "g2-a")]
    G2A,
    #[value(name = "g2-b")]
    G2B,
    /// Matched blue and red pulses on device A, for sideband asymmetry.
    ThermometryA,
    ThermometryB,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Sparse per-trial click records.
    Records,
    /// One row of coincidence counts.
    #[default]
    Counts,
}

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub config: ExperimentConfig,
    /// Digest of the configuration file, if one was read.
    pub config_source: Option<InputDigest>,
    pub measurement: Measurement,
    /// CHSH labels to simulate; empty means all four.
    pub settings: Vec<(u8, u8)>,
    /// Number of sweep points.
    pub points: usize,
    pub trials: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl SimulateOptions {
    pub fn new(config: ExperimentConfig, measurement: Measurement, trials: u64, seed: u64) -> Self {
        Self {
            config,
            config_source: None,
            measurement,
            settings: Vec::new(),
            points: 12,
            trials,
            seed,
            out_dir: PathBuf::from("."),
            format: OutputFormat::Counts,
        }
    }
}

/// One simulated setting: file stem, record label, random stream and the
/// distribution it is drawn from.
#[derive(Clone, Debug)]
pub struct Job {
    pub name: String,
    pub label: (u8, u8),
    pub stream: u64,
    pub distribution: OutcomeDistribution,
}

pub fn simulation_jobs(opts: &SimulateOptions) -> Result<Vec<Job>, CliError> {
    let exp = Experiment::new(opts.config.clone())?;
    let single = |name: &str, stream: u64, distribution: OutcomeDistribution| Job {
        name: name.to_string(),
        label: (0, 0),
        stream,
        distribution,
    };
    let origin = PhaseSetting::new(0.0, 0.0);
    Ok(match opts.measurement {
        Measurement::Chsh => {
            let labels = if opts.settings.is_empty() {
                CHSH_LABELS.to_vec()
            } else {
                opts.settings.clone()
            };
            let mut jobs = Vec::with_capacity(labels.len());
            for (i, j) in labels {
                if !CHSH_LABELS.contains(&(i, j)) {
                    return Err(CliError::Usage(format!("setting {i},{j} is not a CHSH setting")));
                }
                let setting = PhaseSetting::chsh(i, j, opts.config.phi_c);
                jobs.push(Job {
                    name: format!("chsh_{i}{j}"),
                    label: (i, j),
                    stream: 10 * i as u64 + j as u64,
                    distribution: exp.outcome_distribution(&setting)?,
                });
            }
            jobs
        }
        Measurement::Sweep => {
            if !(4..=256).contains(&opts.points) {
                return Err(CliError::Usage("sweep needs between 4 and 256 points".into()));
            }
            (0..opts.points)
                .map(|k| {
                    let phi_r = 2.0 * PI * k as f64 / opts.points as f64;
                    Ok(Job {
                        name: format!("sweep_{k:03}"),
                        label: (0, k as u8),
                        stream: 1000 + k as u64,
                        distribution: exp.outcome_distribution(&PhaseSetting::new(0.0, phi_r))?,
                    })
                })
                .collect::<Result<_, CliError>>()?
        }
        Measurement::G2A => vec![single("g2_a", 2000, exp.single_device_distribution(Device::A, &origin)?)],
        Measurement::G2B => vec![single("g2_b", 2001, exp.single_device_distribution(Device::B, &origin)?)],
        Measurement::ThermometryA => vec![single("thermometry_a", 3000, exp.sideband_distribution(Device::A, false)?)],
        Measurement::ThermometryB => vec![single("thermometry_b", 3001, exp.sideband_distribution(Device::B, false)?)],
    })
}

/// Outcome histograms of every job, without touching the file system.
pub fn simulate_counts(opts: &SimulateOptions) -> Result<Vec<(Job, OutcomeCounts)>, CliError> {
    let jobs = simulation_jobs(opts)?;
    let workers = worker_share(jobs.len());
    run_concurrently(jobs, |job| {
        let counts = sample_counts_sharded(&job.distribution, opts.trials, SeedSpec::new(opts.seed, job.stream), workers)?;
        Ok((job, counts))
    })
}

/// Simulates every job and writes one file per setting into `out_dir`.
pub fn cmd_simulate(opts: &SimulateOptions) -> Result<RunReport, CliError> {
    let single_device = matches!(
        opts.measurement,
        Measurement::G2A | Measurement::G2B | Measurement::ThermometryA | Measurement::ThermometryB
    );
    if single_device && opts.format == OutputFormat::Counts {
        return Err(CliError::Usage(
            "g2 and thermometry measurements need --format records (counts keep no singles)".into(),
        ));
    }
    fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::io(&opts.out_dir, e))?;
    let jobs = simulation_jobs(opts)?;
    let workers = worker_share(jobs.len());
    let written = run_concurrently(jobs, |job| {
        let seed = SeedSpec::new(opts.seed, job.stream);
        let (ext, bytes) = match opts.format {
            OutputFormat::Records => {
                let file = sample_records_sharded(&job.distribution, opts.trials, seed, job.label, workers)?;
                let mut buf = Vec::new();
                write_records(&mut buf, &file.records, file.trials)?;
                ("clicks", buf)
            }
            OutputFormat::Counts => {
                let counts = sample_counts_sharded(&job.distribution, opts.trials, seed, workers)?;
                let row = SettingCounts {
                    setting: job.label,
                    table: coincidences_from_histogram(&counts),
                };
                let mut buf = Vec::new();
                write_counts(&mut buf, &[row])?;
                ("counts", buf)
            }
        };
        let path = opts.out_dir.join(format!("{}.{ext}", job.name));
        write_atomic(&path, &bytes)?;
        Ok(path)
    })?;

    let mut report = RunReport::new("simulate");
    report.provenance.seed = Some(opts.seed);
    report.provenance.trials = Some(opts.trials);
    report.provenance.inputs.extend(opts.config_source.clone());
    report.config = Some(opts.config.clone());
    report.outputs = written.iter().map(|p| p.display().to_string()).collect();
    Ok(report)
}

fn worker_share(jobs: usize) -> usize {
    (default_workers() / jobs.max(1)).max(1)
}

/// Runs `f` on every job on its own thread and returns results in job order.
fn run_concurrently<T, R, F>(jobs: Vec<T>, f: F) -> Result<Vec<R>, CliError>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R, CliError> + Sync,
{
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.into_iter().map(|j| scope.spawn(|| f(j))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    })
}

/// Writes through a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

// ---------------------------------------------------------------- analyze

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMode {
    Chsh,
    Sweep,
    G2,
    Thermometry,
}

enum Loaded {
    Records(RecordFile),
    Counts(Vec<SettingCounts>),
}

fn load_input(path: &Path) -> Result<(Loaded, InputDigest), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let digest = InputDigest {
        name: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    let mut reader = BufReader::new(bytes.as_slice());
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    let loaded = match first.trim_end() {
        RECORD_HEADER => Loaded::Records(read_records(bytes.as_slice()).map_err(|e| CliError::input(path, e))?),
        COUNTS_HEADER => Loaded::Counts(read_counts(bytes.as_slice()).map_err(|e| CliError::input(path, e))?),
        other => {
            return Err(CliError::input(
                path,
                AnalysisError::Format {
                    line: 1,
                    reason: format!("unknown header {other:?}"),
                },
            ))
        }
    };
    Ok((loaded, digest))
}

fn record_label(file: &RecordFile, path: &Path) -> Result<(u8, u8), CliError> {
    let Some(first) = file.records.first() else {
        return Err(CliError::Usage(format!(
            "{}: no click records, so the setting label is unknown",
            path.display()
        )));
    };
    if file.records.iter().any(|r| r.setting_label != first.setting_label) {
        return Err(CliError::Usage(format!("{}: mixed setting labels", path.display())));
    }
    Ok(first.setting_label)
}

/// Dispatches input files to the estimator of `mode`.
pub fn cmd_analyze(paths: &[PathBuf], mode: AnalyzeMode) -> Result<RunReport, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("analyze needs at least one input file".into()));
    }
    let mut report = RunReport::new(match mode {
        AnalyzeMode::Chsh => "analyze chsh",
        AnalyzeMode::Sweep => "analyze sweep",
        AnalyzeMode::G2 => "analyze g2",
        AnalyzeMode::Thermometry => "analyze thermometry",
    });
    let mut inputs = Vec::with_capacity(paths.len());
    for p in paths {
        let (loaded, digest) = load_input(p)?;
        report.provenance.inputs.push(digest);
        inputs.push((p.as_path(), loaded));
    }
    let records = inputs.iter().filter(|(_, l)| matches!(l, Loaded::Records(_))).count();
    if records != 0 && records != inputs.len() {
        return Err(CliError::MixedFormats);
    }

    match mode {
        AnalyzeMode::Chsh | AnalyzeMode::Sweep => {
            let mut rows = Vec::new();
            for (path, loaded) in &inputs {
                match loaded {
                    Loaded::Records(file) => rows.push(SettingCounts {
                        setting: record_label(file, path)?,
                        table: count_coincidences(file),
                    }),
                    Loaded::Counts(r) => rows.extend_from_slice(r),
                }
            }
            if mode == AnalyzeMode::Chsh {
                report.chsh = Some(chsh_analysis(&chsh_tables(&rows)?)?);
            } else {
                let (estimates, fit) = analyze_sweep(&rows)?;
                report.correlations = estimates;
                report.fit = Some(fit);
            }
            report.tables = rows;
        }
        AnalyzeMode::G2 | AnalyzeMode::Thermometry => {
            for (path, loaded) in &inputs {
                let Loaded::Records(file) = loaded else {
                    return Err(CliError::Usage(format!(
                        "{}: {} analysis needs click records",
                        path.display(),
                        if mode == AnalyzeMode::G2 { "g2" } else { "thermometry" }
                    )));
                };
                let singles = count_singles(file);
                let source = path.display().to_string();
                if mode == AnalyzeMode::G2 {
                    let c = cross_correlation(&singles)?;
                    report.cross_correlations.push(CrossCorrelationReport {
                        source,
                        predicted: predicted_visibility(c.g2),
                        cross_correlation: c,
                    });
                } else {
                    report.occupancies.push(OccupancyReport {
                        source,
                        c_b: singles.blue,
                        c_r: singles.red,
                        trials: singles.trials,
                        occupancy: sideband_occupancy(singles.blue, singles.red)?,
                        error: sideband_occupancy_error(singles.blue, singles.red)?,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Correlation per sweep point and a fringe fit. Labels must be `(0, k)`
/// for `k = 0..N`, point `k` sitting at `phi_b + phi_r = 2 pi k / N`.
pub fn analyze_sweep(
    rows: &[SettingCounts],
) -> Result<(Vec<CorrelationEstimate>, crate::analysis::FitResult), CliError> {
    let n = rows.len();
    let mut sorted: Vec<&SettingCounts> = rows.iter().collect();
    sorted.sort_by_key(|r| r.setting);
    for (k, r) in sorted.iter().enumerate() {
        if r.setting != (0, k as u8) {
            return Err(CliError::Usage(format!(
                "sweep labels must be (0,0)..(0,{}), found ({},{})",
                n - 1,
                r.setting.0,
                r.setting.1
            )));
        }
    }
    let mut estimates = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for (k, r) in sorted.iter().enumerate() {
        let summary = summarize_distribution(&e_distribution(&r.table)?);
        estimates.push(CorrelationEstimate {
            setting: r.setting,
            point: correlation_coefficient(&r.table)?,
            summary,
        });
        let x = 2.0 * PI * k as f64 / n as f64;
        // the interval collapses at |E| = 1; one count's worth of E bounds it
        let sigma = (0.5 * (summary.ci_hi - summary.ci_lo)).max(1.0 / r.table.coincidences() as f64);
        points.push(FitPoint::new(x, summary.expectation, sigma));
    }
    Ok((estimates, fit_visibility(&points)?))
}

// ---------------------------------------------------------------- fit

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    /// `E = V cos(x - phi0)` over `x = phi_b + phi_r`.
    Visibility,
    /// Double-exponential occupation rise over the pulse delay (seconds).
    Heating,
}

/// Fits a point file. A fit that runs out of iterations is still reported,
/// with `converged = false`.
pub fn cmd_fit(path: &Path, model: FitModel, fixed_n_init: Option<f64>) -> Result<RunReport, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let points = read_points(bytes.as_slice()).map_err(|e| CliError::input(path, e))?;
    let mut report = RunReport::new(match model {
        FitModel::Visibility => "fit visibility",
        FitModel::Heating => "fit heating",
    });
    report.provenance.inputs.push(InputDigest {
        name: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    let fit = match model {
        FitModel::Visibility => fit_visibility(&points),
        FitModel::Heating => fit_heating(&points, fixed_n_init),
    };
    report.fit = Some(match fit {
        Ok(f) => f,
        Err(AnalysisError::NotConverged(best)) => *best,
        Err(e) => return Err(CliError::input(path, e)),
    });
    Ok(report)
}

// ---------------------------------------------------------------- shared

/// Exit status encoded by a finished report: 0 pass, 2 out of range.
pub fn report_status(report: &RunReport) -> i32 {
    if report.command == "reproduce" {
        let ok = report
            .chsh
            .as_ref()
            .is_some_and(|c| REPRODUCE_ACCEPT.contains(&c.s_expected));
        return if ok { 0 } else { 2 };
    }
    match &report.fit {
        Some(f) if !f.converged => 2,
        _ => 0,
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
