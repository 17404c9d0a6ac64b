//! Optimizes the sum channel gain on several architectures for one channel
//! realization and reproduces the fully-connected optimum on band(2L - 1).
//!
//! ```bash
//! cargo run --release -p bdris --example optimize_compare
//! ```

use bdris::channel::{sample_channels, ScenarioConfig};
use bdris::optimize::{equalize_by_reconstruction, optimize_architecture, Objective, OptimizeOptions};
use bdris::topology::{Architecture, SystemDims};

fn main() -> bdris::Result<()> {
    let cfg = ScenarioConfig { dims: SystemDims::new(2, 8, vec![1, 1]), seed: 2, ..Default::default() };
    let ch = sample_channels(&cfg)?;
    let opts = OptimizeOptions { restarts: 4, max_iters: 200, ..Default::default() };
    let l = cfg.dims.effective_l();
    let mut fully = None;
    for arch in
        [Architecture::single(8)?, Architecture::tridiagonal(8)?, Architecture::group(8, 2)?, Architecture::fully(8)?]
    {
        let res = optimize_architecture(&ch, &arch, Objective::SumChannelGain, &opts)?;
        println!(
            "{:<14} complexity {:>3}  gain {:.4e}  ({} steps)",
            arch.label(),
            arch.complexity_count(),
            res.value,
            res.iterations
        );
        fully = Some(res);
    }
    let fully = fully.expect("fully-connected result");
    let band = Architecture::band(8, 2 * l - 1)?;
    let eq = equalize_by_reconstruction(&ch, &band, Objective::SumChannelGain, &fully)?;
    println!("{:<14} complexity {:>3}  gain {:.4e}  (reconstructed)", band.label(), band.complexity_count(), eq.value);
    Ok(())
}
