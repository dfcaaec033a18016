// Sideband-asymmetry thermometry: matched blue and red pulses on one
// device, occupation from the ratio of the two count rates.
//
//     cargo run --release --example thermometry

use optobell::analysis::{sideband_occupancy, sideband_occupancy_error, singles_from_histogram};
use optobell::model::{Device, Experiment, ExperimentConfig};
use optobell::sampler::{sample_counts, SeedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::reference();
    let exp = Experiment::new(config.clone())?;
    for (device, stream) in [(Device::A, 0), (Device::B, 1)] {
        let dist = exp.sideband_distribution(device, false)?;
        let counts = sample_counts(&dist, 200_000_000, SeedSpec::new(12, stream))?;
        let s = singles_from_histogram(&counts);
        println!(
            "device {device:?}: n = {:.4} +- {:.4} (configured {})",
            sideband_occupancy(s.blue, s.red)?,
            sideband_occupancy_error(s.blue, s.red)?,
            config.device(device).n_init
        );
    }
    // equal rates carry no temperature information
    println!("C_b = C_r: {}", sideband_occupancy(100, 100).unwrap_err());
    Ok(())
}
