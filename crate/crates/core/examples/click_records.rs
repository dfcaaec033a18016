// Counter-based sampling: any trial range can be drawn independently, and
// the written click records are byte-identical for a given seed.
//
//     cargo run --release --example click_records

use optobell::analysis::count_coincidences;
use optobell::model::{Experiment, ExperimentConfig, PhaseSetting};
use optobell::sampler::{read_records, sample_records, sample_records_sharded, write_records, SeedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::reference();
    let dist = Experiment::new(config.clone())?.outcome_distribution(&PhaseSetting::chsh(1, 1, config.phi_c))?;
    let seed = SeedSpec::new(2024, 11);

    let serial = sample_records(&dist, 2_000_000, seed, (1, 1))?;
    let sharded = sample_records_sharded(&dist, 2_000_000, seed, (1, 1), 4)?;
    assert_eq!(serial, sharded);

    let mut bytes = Vec::new();
    write_records(&mut bytes, &serial.records, serial.trials)?;
    let back = read_records(bytes.as_slice())?;
    let table = count_coincidences(&back);
    println!("{} records, {} bytes", back.records.len(), bytes.len());
    println!("{}", String::from_utf8_lossy(&bytes).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!("heralds {}, coincidences {:?}", table.heralds, table.n);
    Ok(())
}
