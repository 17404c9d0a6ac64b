//! Maps random susceptance matrices to scattering matrices and back.
//!
//! ```bash
//! cargo run -p bdris --example cayley_roundtrip
//! ```

use bdris::network::{random_susceptance, susceptance_from_theta, theta_from_susceptance, DEFAULT_Z0};
use bdris::topology::Architecture;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bdris::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [4, 16, 64] {
        let arch = Architecture::band(n, 3)?;
        let b = random_susceptance(&arch, 1.0 / DEFAULT_Z0, &mut rng);
        let theta = theta_from_susceptance(&b, DEFAULT_Z0)?;
        let back = susceptance_from_theta(&theta)?;
        let err = (back.matrix() - b.matrix()).norm() / b.matrix().norm();
        println!(
            "N_I = {n:>2}: unitarity {:.1e}, asymmetry {:.1e}, inverse error {err:.1e}",
            theta.unitarity_residual(),
            theta.relative_asymmetry()
        );
    }
    Ok(())
}
