//! Samples a Rician scenario from the default configuration and evaluates
//! the effective channel for a random scattering matrix.
//!
//! ```bash
//! cargo run -p bdris --example channel_sampling
//! ```

use bdris::channel::{effective_channel, sample_channels, ScenarioConfig};
use bdris::network::sample_symmetric_unitary;

fn main() -> bdris::Result<()> {
    let cfg = ScenarioConfig { seed: 3, ..Default::default() };
    println!("{}", serde_json::to_string_pretty(&cfg).expect("serializable"));
    let ch = sample_channels(&cfg)?;
    println!("G: {:?}, H_r: {:?}, H_d: {:?}", ch.g.shape(), ch.h_r.shape(), ch.h_d.shape());
    println!(
        "mean |G|^2 = {:.3e}, mean |H_r|^2 = {:.3e}",
        ch.g.norm_squared() / ch.g.len() as f64,
        ch.h_r.norm_squared() / ch.h_r.len() as f64
    );
    let theta = sample_symmetric_unitary(ch.n_ris(), 1);
    let eff = effective_channel(&ch, &theta)?;
    println!("effective channel {:?}, gain {:.3e}", eff.shape(), eff.norm_squared());
    Ok(())
}
