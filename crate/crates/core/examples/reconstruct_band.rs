//! Reproduces a fully-connected scattering matrix on band and stem circuits
//! of width `2L - 1`, and shows the single-connected circuit failing.
//!
//! ```bash
//! cargo run -p bdris --example reconstruct_band
//! ```

use bdris::channel::{sample_channels, ScenarioConfig};
use bdris::network::sample_symmetric_unitary;
use bdris::reconstruct::{assemble_system, make_target, rank_report, real_pair, roundtrip, Side, RANK_TOL, SOLVE_TOL};
use bdris::topology::{Architecture, SystemDims};

fn main() -> bdris::Result<()> {
    let cfg = ScenarioConfig { dims: SystemDims::new(4, 12, vec![1, 1]), seed: 5, ..Default::default() };
    let ch = sample_channels(&cfg)?;
    let theta = sample_symmetric_unitary(12, 11);
    let l = cfg.dims.effective_l();
    for arch in [Architecture::band(12, 2 * l - 1)?, Architecture::stem(12, 2 * l - 1)?, Architecture::single(12)?] {
        let rp = real_pair(&make_target(&ch, &theta, Side::Receiver)?, theta.z0());
        let ranks = rank_report(&assemble_system(&rp, &arch)?, RANK_TOL);
        let rep = roundtrip(&ch, &theta, &arch, Side::Receiver, SOLVE_TOL)?;
        println!(
            "{:<12} ranks {}/{}/{}  {:?}  residual {:.1e}  effective-channel error {}",
            arch.label(),
            ranks.rank_a,
            ranks.rank_ab,
            ranks.predicted,
            rep.status,
            rep.residual,
            rep.effective_channel_error.map_or("-".into(), |e| format!("{e:.1e}"))
        );
    }
    Ok(())
}
