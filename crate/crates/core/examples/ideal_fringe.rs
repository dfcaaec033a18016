// Noise-free model: the heralded correlation follows a full-contrast fringe
// and the optimal CHSH settings reach 2 sqrt 2.
//
//     cargo run --release --example ideal_fringe

use std::f64::consts::PI;

use optobell::analysis::chsh_point;
use optobell::model::{Experiment, ExperimentConfig, PhaseSetting};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::ideal();
    let exp = Experiment::new(config.clone())?;

    for k in 0..8 {
        let phi_r = 2.0 * PI * k as f64 / 8.0;
        let e = exp.outcome_distribution(&PhaseSetting::new(0.0, phi_r))?.correlation()?;
        println!("phi_r = {phi_r:.3}  E = {e:+.4}  cos = {:+.4}", (phi_r - config.phi_c).cos());
    }

    let mut e = [0.0; 4];
    for (slot, setting) in e.iter_mut().zip(PhaseSetting::chsh_all(config.phi_c)) {
        *slot = exp.outcome_distribution(&setting)?.correlation()?;
    }
    println!("S = {:.5} (2 sqrt 2 = {:.5})", chsh_point(e), 2.0 * 2f64.sqrt());
    Ok(())
}
