//! Monte-Carlo experiment runner behind the `sweep` subcommand.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::spec::ExperimentSpec;
use crate::channel::{derive_seed, sample_channels};
use crate::error::Result;
use crate::optimize::{
    equalize_by_reconstruction, optimize_architecture, Objective, OptimizeOptions, OptimizeResult, WarmStart,
};
use crate::topology::{effective_l, satisfies_optimality, Architecture};

pub const SCHEMA_VERSION: u32 = 1;

/// One CSV row: statistics of one architecture at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub sweep_axis: String,
    /// Empty without a sweep.
    pub sweep_value: Option<usize>,
    pub architecture: String,
    pub complexity_count: usize,
    pub mean_value: f64,
    /// Sample standard deviation over trials; zero for one trial.
    pub std_value: f64,
    pub trials: usize,
    pub seed_base: u64,
}

/// Per-trial values for every architecture of one sweep point, in spec order.
#[derive(Debug, Clone)]
pub struct PointValues {
    pub sweep_value: Option<usize>,
    pub labels: Vec<String>,
    pub complexity: Vec<usize>,
    /// `values[arch][trial]`.
    pub values: Vec<Vec<f64>>,
    /// Optimal-class rows whose reconstruction failed and fell back to local
    /// optimization.
    pub equalize_fallbacks: usize,
}

struct TrialOutcome {
    values: Vec<f64>,
    fallbacks: usize,
}

fn warm_starts_for(arch: &Architecture, done: &[(Architecture, OptimizeResult)]) -> Vec<WarmStart> {
    done.iter()
        .filter(|(a, _)| a.is_subgraph_of(arch))
        .map(|(_, r)| WarmStart {
            b: r.susceptance.matrix().clone(),
            w: r.beamformer.as_ref().map(|b| b.matrix().clone()),
        })
        .collect()
}

fn reconstructed(eq: crate::optimize::Equalized, fully: &OptimizeResult) -> OptimizeResult {
    OptimizeResult {
        susceptance: eq.susceptance,
        theta: eq.theta,
        beamformer: fully.beamformer.clone(),
        value: eq.value,
        trace: Vec::new(),
        iterations: 0,
        start_index: 0,
    }
}

/// Optimizes every architecture on one channel realization. Architectures
/// are visited in increasing edge count; each run is warm-started from the
/// optima of all earlier architectures whose edges it contains, so
/// optimized values respect edge-set nesting.
///
/// In equalize mode optimal-class rows are reconstructed from the
/// fully-connected optimum instead of optimized. Every other sparse row also
/// tries the reconstruction and keeps it when it beats the local optimum;
/// a consistent reconstruction stays consistent on any supergraph, so
/// nesting is preserved.
fn run_trial(
    archs: &[Architecture],
    optimal: &[bool],
    objective: Objective,
    equalize: bool,
    ch: &crate::channel::ChannelSet,
    opts: &OptimizeOptions,
) -> Result<TrialOutcome> {
    let n = ch.n_ris();
    let fully_arch = Architecture::fully(n)?;
    let is_fully = |a: &Architecture| a.edge_count() == fully_arch.edge_count();
    let mut order: Vec<usize> = (0..archs.len()).collect();
    order.sort_by_key(|&i| (archs[i].edge_count(), i));
    let deferred = |i: usize| equalize && optimal[i] && !is_fully(&archs[i]);

    let optimize = |arch: &Architecture, done: &[(Architecture, OptimizeResult)]| {
        let o = OptimizeOptions { warm_starts: warm_starts_for(arch, done), ..opts.clone() };
        optimize_architecture(ch, arch, objective, &o)
    };
    let mut values = vec![f64::NAN; archs.len()];
    let mut done: Vec<(Architecture, OptimizeResult)> = Vec::new();
    for &i in order.iter().filter(|&&i| !deferred(i)) {
        let res = optimize(&archs[i], &done)?;
        values[i] = res.value;
        done.push((archs[i].clone(), res));
    }

    let mut fallbacks = 0;
    if equalize {
        let fully = match done.iter().find(|(a, _)| is_fully(a)) {
            Some((_, r)) => r.clone(),
            None => optimize(&fully_arch, &done)?,
        };
        for &i in order.iter().filter(|&&i| deferred(i)) {
            let res = match equalize_by_reconstruction(ch, &archs[i], objective, &fully) {
                Ok(eq) => reconstructed(eq, &fully),
                Err(_) => {
                    fallbacks += 1;
                    optimize(&archs[i], &done)?
                }
            };
            values[i] = res.value;
            done.push((archs[i].clone(), res));
        }
        for &i in order.iter().filter(|&&i| !optimal[i] && !is_fully(&archs[i])) {
            if let Ok(eq) = equalize_by_reconstruction(ch, &archs[i], objective, &fully) {
                values[i] = values[i].max(eq.value);
            }
        }
    }
    if objective == Objective::SumRate {
        for v in &mut values {
            *v /= std::f64::consts::LN_2;
        }
    }
    Ok(TrialOutcome { values, fallbacks })
}

/// Runs every sweep point. Trial `t` uses channel seed
/// `derive_seed(seed_base, t)` for all architectures, and optimizer seed
/// `derive_seed(channel seed, 1)`. Sum rates are reported in bits.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PointValues>> {
    spec.validate()?;
    let seed_base = spec.scenario.seed;
    let mut points = Vec::new();
    for (value, scenario) in spec.points()? {
        let n = scenario.dims.n_ris;
        let use_streams = scenario.dims.streams.is_some();
        let l = effective_l(&scenario.dims, use_streams);
        let specs = spec.architectures_at(value);
        let archs: Vec<Architecture> = specs.iter().map(|s| s.build(n, l)).collect::<Result<_>>()?;
        let labels: Vec<String> = specs.iter().zip(&archs).map(|(s, a)| s.label(a)).collect();
        let optimal: Vec<bool> = archs.iter().map(|a| satisfies_optimality(a, l).holds()).collect();
        let opts = OptimizeOptions {
            power_budget: scenario.power_budget(),
            z0: scenario.z0,
            streams: scenario.dims.streams.clone(),
            ..spec.optimizer.clone()
        };

        let outcomes: Vec<Result<TrialOutcome>> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(seed_base, t as u64);
                let ch = sample_channels(&scenario.with_seed(seed))?;
                let o = OptimizeOptions { seed: derive_seed(seed, 1), ..opts.clone() };
                run_trial(&archs, &optimal, spec.objective, spec.equalize, &ch, &o)
            })
            .collect();

        let mut values = vec![Vec::with_capacity(spec.trials); archs.len()];
        let mut equalize_fallbacks = 0;
        for outcome in outcomes {
            let outcome = outcome?;
            equalize_fallbacks += outcome.fallbacks;
            for (row, v) in values.iter_mut().zip(outcome.values) {
                row.push(v);
            }
        }
        points.push(PointValues {
            sweep_value: value,
            labels,
            complexity: archs.iter().map(|a| a.complexity_count()).collect(),
            values,
            equalize_fallbacks,
        });
    }
    Ok(points)
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn records(spec: &ExperimentSpec, points: &[PointValues]) -> Vec<ResultRecord> {
    let axis = spec.sweep.as_ref().map(|s| s.axis.name()).unwrap_or("none");
    points
        .iter()
        .flat_map(|p| {
            p.labels.iter().zip(&p.complexity).zip(&p.values).map(move |((label, &complexity), vals)| {
                let (mean, std) = mean_and_std(vals);
                ResultRecord {
                    schema_version: SCHEMA_VERSION,
                    sweep_axis: axis.to_string(),
                    sweep_value: p.sweep_value,
                    architecture: label.clone(),
                    complexity_count: complexity,
                    mean_value: mean,
                    std_value: std,
                    trials: vals.len(),
                    seed_base: spec.scenario.seed,
                }
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
