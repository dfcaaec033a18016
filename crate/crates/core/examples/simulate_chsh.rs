// Monte Carlo CHSH runs with the full noise budget, with and without
// leaked drive photons.
//
//     cargo run --release --example simulate_chsh [-- trials]

use optobell::analysis::{chsh_analysis, coincidences_from_histogram, SettingCounts};
use optobell::cli::{chsh_tables, simulate_counts, Measurement, SimulateOptions};
use optobell::model::{Experiment, ExperimentConfig, PhaseSetting};

fn run(config: ExperimentConfig, trials: u64) -> Result<(), Box<dyn std::error::Error>> {
    let exp = Experiment::new(config.clone())?;
    let mut exact = [0.0; 4];
    for (e, s) in exact.iter_mut().zip(PhaseSetting::chsh_all(config.phi_c)) {
        *e = exp.outcome_distribution(&s)?.correlation()?;
    }

    let opts = SimulateOptions::new(config, Measurement::Chsh, trials, 1);
    let rows: Vec<SettingCounts> = simulate_counts(&opts)?
        .iter()
        .map(|(job, counts)| SettingCounts {
            setting: job.label,
            table: coincidences_from_histogram(counts),
        })
        .collect();
    let r = chsh_analysis(&chsh_tables(&rows)?)?;
    println!(
        "  model S = {:.3}, simulated S = {:.3} [{:.3}, {:.3}]",
        optobell::analysis::chsh_point(exact),
        r.s_expected,
        r.ci_lo,
        r.ci_hi
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100_000_000);
    println!("{trials} trials per setting");
    println!("leaks off:");
    run(ExperimentConfig::reference().without_leaks(), trials)?;
    println!("leaks on:");
    run(ExperimentConfig::reference(), trials)?;
    Ok(())
}
