// Fits the double-exponential heating curve to the bundled synthetic
// pump-probe scan, or to a point file given on the command line.
//
//     cargo run --release --example heating_fit [-- points.csv]

use std::fs::File;
use std::io::BufReader;

use optobell::analysis::{fit_heating, heating_curve, heating_params, read_points};

const BUNDLED: &str = include_str!("../data/heating_synthetic.points");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points = match std::env::args().nth(1) {
        Some(path) => read_points(BufReader::new(File::open(path)?))?,
        None => read_points(BUNDLED.as_bytes())?,
    };
    let fit = fit_heating(&points, None)?;
    for p in &fit.params {
        println!("{:<7} {:.4e} +- {:.1e}", p.name, p.value, p.uncertainty.unwrap_or(f64::NAN));
    }
    let (h, n0) = heating_params(&fit).ok_or("incomplete fit")?;
    for t in [0.2e-6, 1e-6, 5e-6] {
        println!("n({:.1} us) = {:.3}", t * 1e6, heating_curve(&h, n0, t));
    }
    Ok(())
}
