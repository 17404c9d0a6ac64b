//! Sweeps the band and stem widths and prints one row per architecture,
//! the data behind a performance-complexity plot.
//!
//! ```bash
//! cargo run --release -p bdris --example pareto_sweep
//! ```

use bdris::channel::ScenarioConfig;
use bdris::cli::spec::{ArchSpec, ExperimentSpec, Sweep, SweepAxis, Width};
use bdris::cli::sweep::{records, run_experiment, write_csv};
use bdris::optimize::{Objective, OptimizeOptions};
use bdris::topology::SystemDims;

fn main() -> bdris::Result<()> {
    let spec = ExperimentSpec {
        scenario: ScenarioConfig { dims: SystemDims::new(2, 8, vec![1, 1]), seed: 1, ..Default::default() },
        architectures: vec![ArchSpec::with_q("band", Width::Fixed(1)), ArchSpec::with_q("stem", Width::Fixed(1))],
        objective: Objective::SumChannelGain,
        sweep: Some(Sweep { axis: SweepAxis::Q, values: vec![0, 1, 2, 3, 5, 7] }),
        trials: 4,
        output_path: None,
        equalize: true,
        optimizer: OptimizeOptions { restarts: 2, max_iters: 150, ..Default::default() },
    };
    let points = run_experiment(&spec)?;
    write_csv(std::io::stdout().lock(), &records(&spec, &points))
}
