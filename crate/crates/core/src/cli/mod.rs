//! Command-line front end.
//!
//! Exit codes: 0 when the command's property holds, 1 when it does not,
//! 2 for usage, parse and IO errors.

pub mod spec;
pub mod suites;
pub mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::channel::{sample_channels, Fading, ScenarioConfig};
use crate::error::{Error, Result};
use crate::network::{ScatteringMatrix, SusceptanceMatrix};
use crate::optimize::{optimize_architecture, Objective, OptimizeOptions};
use crate::reconstruct::{
    assemble_system, make_target, preferred_side, rank_report, real_pair, roundtrip, RoundtripStatus, Side, RANK_TOL,
    SOLVE_TOL,
};
use crate::topology::{effective_l, satisfies_optimality, Architecture, OptimalityVerdict};
use spec::{ArchSpec, ExperimentSpec, Width};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bdris", version, about = "BD-RIS architecture analysis and desk-scale experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config: a scenario, or an experiment spec for `sweep`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file (JSON report, or CSV for `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel trials.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the optimal-architecture condition.
    CheckArch {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Width parameter L; defaults to the scenario's value.
        #[arg(long = "l")]
        l: Option<usize>,
    },
    /// Run a property suite.
    Verify {
        /// cayley | ranks | roundtrip | tree-census | row-elim | ubar
        #[arg(long)]
        suite: String,
        /// Port counts (or vertex counts for tree-census).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Real column counts κ (even).
        #[arg(long, value_delimiter = ',')]
        kappa: Option<Vec<usize>>,
    },
    /// Reconstruct a fully-connected scattering matrix on an architecture.
    Reconstruct {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Use Θ = I as the fully-connected target.
        #[arg(long)]
        identity: bool,
        /// receiver | transmitter; defaults by degrees of freedom.
        #[arg(long)]
        side: Option<String>,
    },
    /// Optimize one architecture on one channel realization.
    Optimize {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "sum_channel_gain")]
        objective: String,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
        /// Write the per-step value trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run an experiment spec and write one CSV row per (sweep value, architecture).
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Print circuit complexity of an architecture.
    Complexity {
        #[command(flatten)]
        arch: ArchArgs,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Debug, Args, Default)]
struct ArchArgs {
    /// single | fully | group | tridiagonal | arrowhead | band | stem
    #[arg(long)]
    arch: Option<String>,
    /// Band or stem width, or "optimal" for 2L-1.
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    /// 1-based stem centers.
    #[arg(long, value_delimiter = ',')]
    centers: Option<Vec<usize>>,
    /// Architecture JSON file (overrides the other architecture flags).
    #[arg(long)]
    arch_file: Option<PathBuf>,
}

/// Per-field scenario overrides.
#[derive(Debug, Args, Default)]
struct ScenarioArgs {
    #[arg(long)]
    n_tx: Option<usize>,
    #[arg(long)]
    n_ris: Option<usize>,
    /// Receive antennas per user, comma separated.
    #[arg(long, value_delimiter = ',')]
    users: Option<Vec<usize>>,
    /// Streams per user, comma separated.
    #[arg(long, value_delimiter = ',')]
    streams: Option<Vec<usize>>,
    #[arg(long)]
    d_tx_ris: Option<f64>,
    #[arg(long)]
    d_ris_user: Option<f64>,
    #[arg(long)]
    d_tx_user: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pathloss_ref_db: Option<f64>,
    #[arg(long)]
    pathloss_exponent: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rician_factor_db: Option<f64>,
    /// rician | rayleigh
    #[arg(long)]
    fading: Option<String>,
    #[arg(long)]
    direct_blocked: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    noise_dbm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    power_budget_dbm: Option<f64>,
    #[arg(long)]
    z0: Option<f64>,
}

impl ScenarioArgs {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = &self.$field { cfg.$field = v.clone(); } )* };
        }
        set!(
            d_tx_ris,
            d_ris_user,
            pathloss_ref_db,
            pathloss_exponent,
            rician_factor_db,
            direct_blocked,
            noise_dbm,
            power_budget_dbm,
            z0
        );
        if let Some(v) = self.d_tx_user {
            cfg.d_tx_user = Some(v);
        }
        if let Some(v) = self.n_tx {
            cfg.dims.n_tx = v;
        }
        if let Some(v) = self.n_ris {
            cfg.dims.n_ris = v;
        }
        if let Some(v) = &self.users {
            cfg.dims.users = v.clone();
        }
        if let Some(v) = &self.streams {
            cfg.dims.streams = Some(v.clone());
        }
        if let Some(f) = &self.fading {
            cfg.fading = match f.as_str() {
                "rician" => Fading::Rician,
                "rayleigh" => Fading::Rayleigh,
                other => return Err(Error::invalid(format!("unknown fading {other:?}"))),
            };
        }
        cfg.validate()
    }
}

impl ArchArgs {
    fn spec(&self) -> Result<ArchSpec> {
        let kind = self.arch.clone().ok_or_else(|| Error::invalid("--arch or --arch-file is required"))?;
        Ok(ArchSpec {
            kind,
            q: self.q.as_deref().map(Width::parse).transpose()?,
            groups: self.groups,
            group_size: self.group_size,
            centers: self.centers.clone(),
            label: None,
        })
    }

    fn build(&self, n: usize, l: usize) -> Result<Architecture> {
        if let Some(path) = &self.arch_file {
            return Ok(serde_json::from_str(&fs::read_to_string(path)?)?);
        }
        self.spec()?.build(n, l)
    }
}

/// Entry point for the binary: parses `std::env::args` and returns the
/// process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_scenario(common: &CommonArgs, overrides: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn emit(common: &CommonArgs, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(path) = &common.out {
        write_file(path, text.as_bytes())?;
    }
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn scenario_l(cfg: &ScenarioConfig) -> usize {
    effective_l(&cfg.dims, cfg.dims.streams.is_some())
}

fn verdict_json(v: &OptimalityVerdict) -> Value {
    let one_based = |p: &Vec<usize>| p.iter().map(|i| i + 1).collect::<Vec<_>>();
    match v {
        OptimalityVerdict::Satisfied(p) => json!({"verdict": "satisfied", "holds": true, "witness": one_based(p)}),
        OptimalityVerdict::NotSatisfied => json!({"verdict": "not_satisfied", "holds": false, "witness": null}),
        OptimalityVerdict::CanonicalOnly { holds, witness } => {
            json!({"verdict": "canonical_only", "holds": holds, "witness": witness.as_ref().map(one_based)})
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let common = cli.common;
    if let Some(threads) = common.threads {
        // A second global pool in the same process is not an error worth reporting.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match cli.command {
        Command::CheckArch { arch, scenario, l } => {
            let cfg = load_scenario(&common, &scenario)?;
            let l = l.unwrap_or_else(|| scenario_l(&cfg));
            if l == 0 {
                return Err(Error::invalid("L must be positive"));
            }
            let arch = arch.build(cfg.dims.n_ris, l)?;
            let verdict = satisfies_optimality(&arch, l);
            let mut report = verdict_json(&verdict);
            report["arch"] = serde_json::to_value(&arch)?;
            report["l"] = json!(l);
            report["complexity_count"] = json!(arch.complexity_count());
            emit(&common, &report)?;
            Ok(if verdict.holds() { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Complexity { arch, scenario } => {
            let cfg = load_scenario(&common, &scenario)?;
            let l = scenario_l(&cfg);
            let arch = arch.build(cfg.dims.n_ris, l)?;
            emit(
                &common,
                &json!({
                    "arch": arch.label(),
                    "n_elements": arch.n_elements(),
                    "edges": arch.edge_count(),
                    "complexity_count": arch.complexity_count(),
                    "l": l,
                    "optimal_class_count": l * (2 * arch.n_elements() - 2 * l + 1),
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite, sizes, kappa } => {
            let params =
                suites::SuiteParams { seed: common.seed.unwrap_or(0), trials: common.trials, n_ris: sizes, kappa };
            let report = suites::run_suite(&suite, &params)?;
            emit(&common, &serde_json::to_value(&report)?)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Reconstruct { arch, scenario, identity, side } => {
            let cfg = load_scenario(&common, &scenario)?;
            let n = cfg.dims.n_ris;
            let arch = arch.build(n, scenario_l(&cfg))?;
            let ch = sample_channels(&cfg)?;
            let side = match side.as_deref() {
                None => preferred_side(&cfg.dims),
                Some("receiver") => Side::Receiver,
                Some("transmitter") => Side::Transmitter,
                Some(other) => return Err(Error::invalid(format!("unknown side {other:?}"))),
            };
            let theta = if identity {
                ScatteringMatrix::identity(n, cfg.z0)
            } else {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
                    crate::channel::derive_seed(cfg.seed, 1),
                );
                crate::network::sample_symmetric_unitary_with(n, cfg.z0, 1.0 / cfg.z0, &mut rng)
            };
            let rp = real_pair(&make_target(&ch, &theta, side)?, cfg.z0);
            let ranks = rank_report(&assemble_system(&rp, &arch)?, RANK_TOL);
            let rt = roundtrip(&ch, &theta, &arch, side, SOLVE_TOL)?;
            let b_hat = rt.susceptance.as_ref().map(susceptance_rows);
            emit(
                &common,
                &json!({
                    "status": rt.status,
                    "side": side,
                    "residual": rt.residual,
                    "conditioning": rt.conditioning,
                    "near_singular": rt.near_singular,
                    "rank_a": ranks.rank_a,
                    "rank_ab": ranks.rank_ab,
                    "predicted_rank": ranks.predicted,
                    "roundtrip_error": rt.roundtrip_error,
                    "effective_channel_error": rt.effective_channel_error,
                    "arch": serde_json::to_value(&arch)?,
                    "dims": cfg.dims,
                    "seed": cfg.seed,
                    "b_hat": b_hat,
                }),
            )?;
            Ok(match rt.status {
                RoundtripStatus::Solved if rt.roundtrip_error.is_some_and(|e| e <= SOLVE_TOL) => EXIT_OK,
                _ => EXIT_PROPERTY,
            })
        }
        Command::Optimize { arch, scenario, objective, restarts, max_iters, trace } => {
            let cfg = load_scenario(&common, &scenario)?;
            let objective: Objective = serde_json::from_value(json!(objective))?;
            let arch = arch.build(cfg.dims.n_ris, scenario_l(&cfg))?;
            let ch = sample_channels(&cfg)?;
            let opts = OptimizeOptions {
                restarts,
                max_iters,
                seed: crate::channel::derive_seed(cfg.seed, 1),
                power_budget: cfg.power_budget(),
                streams: cfg.dims.streams.clone(),
                z0: cfg.z0,
                ..Default::default()
            };
            let res = optimize_architecture(&ch, &arch, objective, &opts)?;
            if let Some(path) = trace {
                let mut text = String::from("step,value\n");
                for (i, v) in res.trace.iter().enumerate() {
                    text.push_str(&format!("{i},{v}\n"));
                }
                write_file(&path, text.as_bytes())?;
            }
            let mut report = json!({
                "value": res.value,
                "objective": objective.name(),
                "restarts": restarts,
                "iterations": res.iterations,
                "seed": cfg.seed,
                "arch": arch.label(),
                "complexity_count": arch.complexity_count(),
            });
            if objective == Objective::SumRate {
                report["value_bits"] = json!(res.value / std::f64::consts::LN_2);
                report["unit"] = json!("nats");
            }
            emit(&common, &report)?;
            Ok(EXIT_OK)
        }
        Command::Sweep { scenario } => {
            let path =
                common.config.as_ref().ok_or_else(|| Error::invalid("sweep needs --config <experiment.json>"))?;
            let mut spec: ExperimentSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
            if let Some(seed) = common.seed {
                spec.scenario.seed = seed;
            }
            if let Some(trials) = common.trials {
                spec.trials = trials;
            }
            scenario.apply(&mut spec.scenario)?;
            let out = common
                .out
                .clone()
                .or_else(|| spec.output_path.clone())
                .ok_or_else(|| Error::invalid("sweep needs --out or output_path"))?;
            let points = sweep::run_experiment(&spec)?;
            let fallbacks: usize = points.iter().map(|p| p.equalize_fallbacks).sum();
            let rows = sweep::records(&spec, &points);
            let mut buf = Vec::new();
            sweep::write_csv(&mut buf, &rows)?;
            write_file(&out, &buf)?;
            println!(
                "{}",
                serde_json::to_string_pretty(
                    &json!({"rows": rows.len(), "output": out, "equalize_fallbacks": fallbacks})
                )?
            );
            Ok(EXIT_OK)
        }
    }
}

fn susceptance_rows(b: &SusceptanceMatrix) -> Vec<Vec<f64>> {
    let m = b.matrix();
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
