// The truncated Fock-space engine on its own: a weak two-mode squeezer,
// loss on both arms, and threshold-detector click probabilities.
//
//     cargo run --release --example fock_engine

use optobell::fock::{ClickPattern, ModeId, TruncatedState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, b) = (ModeId(0), ModeId(1));
    let p: f64 = 0.01;
    let state = TruncatedState::vacuum(&[a, b], 4)?
        .apply_two_mode_squeeze(a, b, p.sqrt(), 0.0)?
        .apply_loss(a, 0.3)?
        .apply_loss(b, 0.2)?;

    println!("trace {:.12}, truncation leak {:.2e}", state.trace(), state.truncation_loss());
    println!("<n_a> = {:.6}, <n_b> = {:.6}", state.mean_number(a)?, state.mean_number(b)?);

    let clicks = state.click_distribution(&[a, b])?;
    for bits in 0..4u16 {
        let pattern = ClickPattern(bits);
        println!("a:{} b:{}  {:.4e}", pattern.clicked(0) as u8, pattern.clicked(1) as u8, clicks.probability(pattern));
    }
    let both = clicks.probability(ClickPattern(0b11));
    let g2 = both / (clicks.marginal(a)? * clicks.marginal(b)?);
    println!("cross-correlation g2 = {g2:.1}");
    Ok(())
}
