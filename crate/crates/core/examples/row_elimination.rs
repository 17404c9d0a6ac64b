//! Builds the stacked linear system for band(3) and verifies the row
//! combinations that make it consistent.
//!
//! ```bash
//! cargo run -p bdris --example row_elimination
//! ```

use bdris::channel::{sample_channels, ScenarioConfig};
use bdris::network::sample_symmetric_unitary;
use bdris::reconstruct::{assemble_system, make_target, real_pair, verify_row_elimination, Side};
use bdris::topology::{Architecture, SystemDims};

fn main() -> bdris::Result<()> {
    let cfg = ScenarioConfig { dims: SystemDims::new(2, 6, vec![1, 1]), seed: 4, ..Default::default() };
    let ch = sample_channels(&cfg)?;
    let theta = sample_symmetric_unitary(6, 9);
    let rp = real_pair(&make_target(&ch, &theta, Side::Receiver)?, theta.z0());
    let sys = assemble_system(&rp, &Architecture::band(6, 3)?)?;
    println!("A is {}x{}, kappa = {}", sys.a.nrows(), sys.a.ncols(), sys.kappa);
    for j in 1..sys.kappa {
        for l in j + 1..=sys.kappa {
            let r = verify_row_elimination(&sys, &rp, j, l)?;
            println!("(j, l) = ({j}, {l}): relative residual {:.1e}", r.relative());
        }
    }
    Ok(())
}
