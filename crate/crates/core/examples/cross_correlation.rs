// Single-device cross-correlation from simulated click records, and the
// fringe visibility it implies.
//
//     cargo run --release --example cross_correlation

use optobell::analysis::{count_singles, cross_correlation, predicted_visibility};
use optobell::model::{Device, Experiment, ExperimentConfig, PhaseSetting};
use optobell::sampler::{sample_records, SeedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let exp = Experiment::new(ExperimentConfig::reference())?;
    for (device, stream) in [(Device::A, 0), (Device::B, 1)] {
        let dist = exp.single_device_distribution(device, &PhaseSetting::new(0.0, 0.0))?;
        let exact = dist.both_any() / (dist.blue_any() * dist.red_any());

        let records = sample_records(&dist, 100_000_000, SeedSpec::new(6, stream), (0, 0))?;
        let g = cross_correlation(&count_singles(&records))?;
        println!(
            "device {device:?}: g2 = {:.2} +- {:.2} (model {exact:.2}), V_pred = {:.3}, {} click records",
            g.g2,
            g.g2_error,
            predicted_visibility(g.g2).visibility,
            records.records.len()
        );
    }
    Ok(())
}
