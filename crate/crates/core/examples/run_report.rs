// Drives the command layer from code: simulate into a directory, analyze
// the files, and keep the JSON report with its provenance.
//
//     cargo run --release --example run_report

use optobell::cli::{cmd_analyze, cmd_simulate, AnalyzeMode, Measurement, OutputFormat, RunReport, SimulateOptions};
use optobell::model::ExperimentConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("optobell-report-{}", std::process::id()));
    let mut opts = SimulateOptions::new(ExperimentConfig::ideal(), Measurement::Chsh, 2_000_000, 3);
    opts.out_dir = dir.clone();
    opts.format = OutputFormat::Records;
    let simulated = cmd_simulate(&opts)?;

    let inputs: Vec<_> = simulated.outputs.iter().map(Into::into).collect();
    let report = cmd_analyze(&inputs, AnalyzeMode::Chsh)?;
    print!("{}", report.render());

    let json = report.to_json();
    assert_eq!(RunReport::from_json(&json)?, report);
    println!("{} bytes of JSON", json.len());
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
