// Recomputes the CHSH result from the bundled coincidence counts.
//
//     cargo run --release --example reproduce_table

use optobell::analysis::{chsh_analysis, read_counts};
use optobell::cli::{chsh_tables, load_reference_counts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (text, origin) = load_reference_counts()?;
    let rows = read_counts(text.as_bytes())?;
    let result = chsh_analysis(&chsh_tables(&rows)?)?;

    println!("counts from {origin}");
    for e in &result.correlations {
        let s = e.summary;
        println!(
            "E{}{} = {:+.3} {:+.3}/{:+.3}",
            e.setting.0,
            e.setting.1,
            s.expectation,
            s.minus(),
            s.plus()
        );
    }
    println!(
        "S = {:.3} {:+.3}/{:+.3}",
        result.s_expected,
        result.ci_lo - result.s_expected,
        result.ci_hi - result.s_expected
    );
    if let Some(sigma) = result.sigma_violation {
        println!("classical bound exceeded by {sigma:.1} standard deviations");
    }
    Ok(())
}
