//! Property suites behind the `verify` subcommand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::channel::{derive_seed, sample_channels, ChannelSet, ScenarioConfig};
use crate::error::{Error, Result};
use crate::network::{
    matrix_from_theta, random_symmetric, sample_symmetric_unitary_with, theta_from_matrix, DEFAULT_Z0,
};
use crate::reconstruct::{
    assemble_system, check_ubar, make_target, rank_report, real_pair, roundtrip, verify_row_elimination, Side,
    RANK_TOL, SOLVE_TOL,
};
use crate::topology::{tree_equivalence_census, Architecture, SystemDims};

pub const SUITES: [&str; 6] = ["cayley", "ranks", "roundtrip", "tree-census", "row-elim", "ubar"];

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seed: u64,
    pub failures: Vec<Value>,
    pub details: Value,
}

/// Suite parameters; `None` fields take suite-specific defaults.
#[derive(Debug, Clone, Default)]
pub struct SuiteParams {
    pub seed: u64,
    pub trials: Option<usize>,
    pub n_ris: Option<Vec<usize>>,
    pub kappa: Option<Vec<usize>>,
}

pub fn run_suite(name: &str, p: &SuiteParams) -> Result<SuiteReport> {
    let (failures, details) = match name {
        "cayley" => cayley(p)?,
        "ranks" => ranks(p)?,
        "roundtrip" => roundtrip_suite(p)?,
        "tree-census" => census(p)?,
        "row-elim" => row_elim(p)?,
        "ubar" => ubar(p)?,
        other => return Err(Error::invalid(format!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport { suite: name.to_string(), passed: failures.is_empty(), seed: p.seed, failures, details })
}

type SuiteOut = Result<(Vec<Value>, Value)>;

/// Channels for `n_ris` ports with `users` single-antenna users and `n_tx`
/// transmit antennas.
pub fn trial_channels(n_ris: usize, n_tx: usize, users: usize, seed: u64) -> Result<ChannelSet> {
    let cfg = ScenarioConfig { dims: SystemDims::new(n_tx, n_ris, vec![1; users]), seed, ..Default::default() };
    sample_channels(&cfg)
}

fn trial_theta(n: usize, seed: u64, z0: f64) -> crate::network::ScatteringMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_symmetric_unitary_with(n, z0, 1.0 / z0, &mut rng)
}

fn cayley(p: &SuiteParams) -> SuiteOut {
    let sizes = p.n_ris.clone().unwrap_or_else(|| vec![4, 16, 64]);
    let trials = p.trials.unwrap_or(100);
    let z0 = DEFAULT_Z0;
    let mut failures = Vec::new();
    let mut worst = Vec::new();
    for &n in &sizes {
        let results: Vec<Result<(f64, f64, f64)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(p.seed, (n * 1_000_000 + t) as u64));
                let b = random_symmetric(n, 1.0 / z0, &mut rng);
                let theta = theta_from_matrix(&b, z0)?;
                let back = matrix_from_theta(theta.matrix(), z0)?;
                Ok((theta.unitarity_residual(), theta.relative_asymmetry(), (back - &b).norm() / b.norm()))
            })
            .collect();
        let (mut wu, mut ws, mut wr) = (0.0f64, 0.0f64, 0.0f64);
        for (t, r) in results.into_iter().enumerate() {
            let (u, s, rt) = r?;
            if u > 1e-10 * n as f64 || s > 1e-12 || rt > 1e-9 {
                failures.push(json!({"n_ris": n, "trial": t, "unitarity": u, "asymmetry": s, "roundtrip": rt}));
            }
            wu = wu.max(u);
            ws = ws.max(s);
            wr = wr.max(rt);
        }
        worst
            .push(json!({"n_ris": n, "trials": trials, "max_unitarity": wu, "max_asymmetry": ws, "max_roundtrip": wr}));
    }
    Ok((failures, json!(worst)))
}

fn ranks(p: &SuiteParams) -> SuiteOut {
    let sizes = p.n_ris.clone().unwrap_or_else(|| vec![6, 8, 10, 12]);
    let kappas = p.kappa.clone().unwrap_or_else(|| vec![2, 4]);
    let trials = p.trials.unwrap_or(50);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for &n in &sizes {
        for &kappa in &kappas {
            if kappa % 2 != 0 || kappa == 0 || kappa > n {
                return Err(Error::invalid(format!("kappa must be even with 2 <= kappa <= N_I, got {kappa}")));
            }
            let users = kappa / 2;
            let arch = Architecture::band(n, kappa - 1)?;
            let reports: Vec<Result<_>> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(p.seed, (n * 1000 + kappa * 100 + t) as u64);
                    let ch = trial_channels(n, users, users, seed)?;
                    let theta = trial_theta(n, derive_seed(seed, 1), DEFAULT_Z0);
                    let rp = real_pair(&make_target(&ch, &theta, Side::Receiver)?, DEFAULT_Z0);
                    Ok(rank_report(&assemble_system(&rp, &arch)?, RANK_TOL))
                })
                .collect();
            let mut ok = 0;
            let mut example = None;
            for (t, r) in reports.into_iter().enumerate() {
                let r = r?;
                example.get_or_insert(r);
                if r.matches() {
                    ok += 1;
                } else {
                    failures.push(json!({"n_ris": n, "kappa": kappa, "trial": t, "report": r}));
                }
            }
            rows.push(json!({"n_ris": n, "kappa": kappa, "trials": trials, "matching": ok, "example": example}));
        }
    }
    Ok((failures, json!(rows)))
}

/// Roundtrip configurations: `(side, D)` with `D` single-antenna users on
/// the receiver side or `D` transmit antennas on the transmitter side.
fn roundtrip_suite(p: &SuiteParams) -> SuiteOut {
    let sizes = p.n_ris.clone().unwrap_or_else(|| vec![8, 12, 16]);
    let dofs = p.kappa.clone().map(|k| k.iter().map(|k| k / 2).collect()).unwrap_or_else(|| vec![2, 4]);
    let trials = p.trials.unwrap_or(200);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for &n in &sizes {
        for &d in &dofs {
            for side in [Side::Receiver, Side::Transmitter] {
                let (n_tx, users) = match side {
                    Side::Receiver => (d + 2, d),
                    Side::Transmitter => (d, d + 2),
                };
                let l = d.min(n / 2);
                for arch in [Architecture::band(n, 2 * l - 1)?, Architecture::stem(n, 2 * l - 1)?] {
                    let results: Vec<Result<_>> = (0..trials)
                        .into_par_iter()
                        .map(|t| {
                            let seed = derive_seed(p.seed, (n * 100_000 + d * 10_000 + t) as u64);
                            let ch = trial_channels(n, n_tx, users, seed)?;
                            let theta = trial_theta(n, derive_seed(seed, 1), DEFAULT_Z0);
                            roundtrip(&ch, &theta, &arch, side, SOLVE_TOL)
                        })
                        .collect();
                    let mut ok = 0;
                    let mut unflagged = 0;
                    let mut worst = 0.0f64;
                    for (t, r) in results.into_iter().enumerate() {
                        let r = r?;
                        if r.succeeded(1e-8) {
                            ok += 1;
                            worst = worst.max(r.effective_channel_error.unwrap_or(0.0));
                        } else if !r.near_singular {
                            unflagged += 1;
                            failures.push(json!({"n_ris": n, "dof": d, "side": side, "arch": arch.label(), "trial": t, "report": r}));
                        }
                    }
                    if (ok as f64) < 0.99 * trials as f64 {
                        failures.push(json!({"n_ris": n, "dof": d, "side": side, "arch": arch.label(), "success_rate": ok as f64 / trials as f64}));
                    }
                    rows.push(json!({
                        "n_ris": n, "dof": d, "side": side, "arch": arch.label(), "trials": trials,
                        "succeeded": ok, "unflagged_failures": unflagged, "max_error": worst
                    }));
                }
            }
        }
    }
    Ok((failures, json!(rows)))
}

fn census(p: &SuiteParams) -> SuiteOut {
    let sizes = p.n_ris.clone().unwrap_or_else(|| vec![2, 3, 4, 5, 6]);
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for &n in &sizes {
        let c = tree_equivalence_census(n)?;
        let cayley = if n >= 2 { (n as u64).pow(n as u32 - 2) } else { 1 };
        if !c.mismatches.is_empty() || c.trees != c.satisfied || c.trees != cayley {
            failures.push(json!({"n": n, "census": c, "expected_trees": cayley}));
        }
        rows.push(json!({"n": n, "graphs": c.graphs, "trees": c.trees, "satisfied": c.satisfied, "mismatches": c.mismatches.len()}));
    }
    Ok((failures, json!(rows)))
}

fn row_elim(p: &SuiteParams) -> SuiteOut {
    let n = p.n_ris.as_ref().and_then(|v| v.first().copied()).unwrap_or(6);
    let kappa = p.kappa.as_ref().and_then(|v| v.first().copied()).unwrap_or(4);
    if !kappa.is_multiple_of(2) || kappa == 0 || kappa > n {
        return Err(Error::invalid(format!("kappa must be even with 2 <= kappa <= N_I, got {kappa}")));
    }
    let trials = p.trials.unwrap_or(20);
    let arch = Architecture::band(n, kappa - 1)?;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for t in 0..trials {
        let seed = derive_seed(p.seed, t as u64);
        let ch = trial_channels(n, kappa / 2, kappa / 2, seed)?;
        let theta = trial_theta(n, derive_seed(seed, 1), DEFAULT_Z0);
        let rp = real_pair(&make_target(&ch, &theta, Side::Receiver)?, DEFAULT_Z0);
        let sys = assemble_system(&rp, &arch)?;
        for j in 1..kappa {
            for l in j + 1..=kappa {
                let r = verify_row_elimination(&sys, &rp, j, l)?;
                worst = worst.max(r.relative());
                if r.relative() > 1e-8 {
                    failures.push(json!({"trial": t, "j": j, "l": l, "result": r}));
                }
            }
        }
    }
    Ok((failures, json!({"n_ris": n, "kappa": kappa, "trials": trials, "max_relative": worst})))
}

fn ubar(p: &SuiteParams) -> SuiteOut {
    let sizes = p.n_ris.clone().unwrap_or_else(|| vec![4, 8, 16]);
    let trials = p.trials.unwrap_or(50);
    let mut failures = Vec::new();
    let mut worst_anti = 0.0f64;
    for &n in &sizes {
        for t in 0..trials {
            let seed = derive_seed(p.seed, (n * 10_000 + t) as u64);
            let ch = trial_channels(n, 3, 2, seed)?;
            let theta = trial_theta(n, derive_seed(seed, 1), DEFAULT_Z0);
            for side in [Side::Receiver, Side::Transmitter] {
                let target = make_target(&ch, &theta, side)?;
                let member = check_ubar(&target, 1e-10);
                let anti = real_pair(&target, DEFAULT_Z0).antisymmetry_residual();
                worst_anti = worst_anti.max(anti);
                if !member || anti > 1e-9 {
                    failures
                        .push(json!({"n_ris": n, "trial": t, "side": side, "member": member, "antisymmetry": anti}));
                }
            }
        }
    }
    Ok((failures, json!({"sizes": sizes, "trials": trials, "max_antisymmetry": worst_anti})))
}
