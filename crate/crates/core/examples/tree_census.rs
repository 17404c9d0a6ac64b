//! Enumerates every labeled graph on up to six vertices and confirms that
//! the `L = 1` condition holds exactly for trees.
//!
//! ```bash
//! cargo run --release -p bdris --example tree_census
//! ```

use bdris::topology::tree_equivalence_census;

fn main() -> bdris::Result<()> {
    for n in 2..=6 {
        let c = tree_equivalence_census(n)?;
        println!(
            "n = {n}: {:>6} graphs, {:>5} trees, {:>5} satisfy, {} mismatches",
            c.graphs,
            c.trees,
            c.satisfied,
            c.mismatches.len()
        );
    }
    Ok(())
}
