// Sweeps the red phase over a period, estimates the correlation at each
// point and fits the fringe visibility.
//
//     cargo run --release --example visibility_sweep

use optobell::analysis::{coincidences_from_histogram, predicted_visibility, SettingCounts};
use optobell::cli::{analyze_sweep, simulate_counts, Measurement, SimulateOptions};
use optobell::model::{Experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::reference();
    println!("model visibility {:.3}", Experiment::new(config.clone())?.visibility()?);
    println!("from g2 = 9.3: {:.3}", predicted_visibility(9.3).visibility);

    let opts = SimulateOptions::new(config, Measurement::Sweep, 50_000_000, 2);
    let rows: Vec<SettingCounts> = simulate_counts(&opts)?
        .iter()
        .map(|(job, counts)| SettingCounts {
            setting: job.label,
            table: coincidences_from_histogram(counts),
        })
        .collect();
    let (points, fit) = analyze_sweep(&rows)?;
    for p in &points {
        println!("point {:>2}: E = {:+.3}", p.setting.1, p.summary.expectation);
    }
    println!(
        "fit: V = {:.3} +- {:.3}, phi0 = {:.3}",
        fit.get("V").unwrap_or(f64::NAN),
        fit.uncertainty("V").unwrap_or(f64::NAN),
        fit.get("phi0").unwrap_or(f64::NAN)
    );
    Ok(())
}
