//! Builds the standard architectures, prints their circuit complexity and
//! checks the optimal-architecture condition for `L = 2`.
//!
//! ```bash
//! cargo run -p bdris --example architectures
//! ```

use bdris::topology::{satisfies_optimality, Architecture};

fn main() -> bdris::Result<()> {
    let n = 8;
    let l = 2;
    let archs = [
        Architecture::single(n)?,
        Architecture::tridiagonal(n)?,
        Architecture::arrowhead(n)?,
        Architecture::group(n, 2)?,
        Architecture::band(n, 2 * l - 1)?,
        Architecture::stem(n, 2 * l - 1)?,
        Architecture::fully(n)?,
    ];
    println!("{:<16} {:>10} {:>8}  witness", "architecture", "complexity", "optimal");
    for arch in &archs {
        let verdict = satisfies_optimality(arch, l);
        let witness = verdict.witness().map(|p| format!("{p:?}")).unwrap_or_default();
        println!("{:<16} {:>10} {:>8}  {witness}", arch.label(), arch.complexity_count(), verdict.holds());
    }
    println!("\nband(3) as JSON: {}", serde_json::to_string(&archs[4]).expect("serializable"));
    Ok(())
}
