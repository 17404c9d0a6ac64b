//! Utilities of the effective channel and their local optimization over
//! graph-constrained susceptance matrices.
//!
//! The optimizer works on the free entries `x` of `B` in normalized units
//! `y = Z0 x`, so that `i Z0 B` has entries of order one. Each restart runs
//! limited-memory quasi-Newton ascent with backtracking; for the sum rate it
//! alternates with a projected-gradient step on the beamformer.

use std::collections::VecDeque;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, effective_channel_matrix, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix, RVector, I};
use crate::network::{theta_from_matrix, ScatteringMatrix, SusceptanceMatrix, VarIndex, DEFAULT_Z0};
use crate::reconstruct::{assemble_system, make_target, real_pair, solve_detailed, Side, SOLVE_TOL};
use crate::topology::Architecture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    SumChannelGain,
    /// Sum of per-user rates in nats.
    SumRate,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::SumChannelGain => "sum_channel_gain",
            Objective::SumRate => "sum_rate",
        }
    }

    pub fn uses_beamformer(&self) -> bool {
        matches!(self, Objective::SumRate)
    }
}

/// Precoder `W` (`N_T x sum d_k`), user `k` owning `streams[k]` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    w: CMatrix,
    power_budget: f64,
    streams: Vec<usize>,
}

impl Beamformer {
    pub fn new(w: CMatrix, power_budget: f64, streams: Vec<usize>) -> Result<Self> {
        if w.ncols() != streams.iter().sum::<usize>() {
            return Err(Error::dims(format!(
                "precoder has {} columns for {} streams",
                w.ncols(),
                streams.iter().sum::<usize>()
            )));
        }
        if power_budget.is_nan() || power_budget <= 0.0 {
            return Err(Error::invalid("power budget must be positive"));
        }
        let mut bf = Self { w, power_budget, streams };
        bf.project();
        Ok(bf)
    }

    /// Maximum-ratio transmission on `eff`, scaled to the full budget. User
    /// `k` uses the conjugates of its first `streams[k]` channel rows.
    pub fn matched(eff: &CMatrix, user_dims: &[usize], streams: &[usize], power_budget: f64) -> Result<Self> {
        let mut w = CMatrix::zeros(eff.ncols(), streams.iter().sum());
        let (mut row, mut col) = (0, 0);
        for (&nk, &dk) in user_dims.iter().zip(streams) {
            for s in 0..dk {
                w.set_column(col + s, &eff.row(row + s).adjoint());
            }
            row += nk;
            col += dk;
        }
        let norm2 = w.norm_squared();
        if norm2 > 0.0 {
            w *= Complex64::from((power_budget / norm2).sqrt());
        } else {
            let per = (power_budget / w.len().max(1) as f64).sqrt();
            w.fill(Complex64::from(per));
        }
        Self::new(w, power_budget, streams.to_vec())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn streams(&self) -> &[usize] {
        &self.streams
    }

    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }

    fn project(&mut self) {
        let p = self.power();
        if p > self.power_budget {
            self.w *= Complex64::from((self.power_budget / p).sqrt());
        }
    }

    fn stepped(&self, dir: &CMatrix, t: f64) -> Self {
        let mut next = Self { w: &self.w + dir * Complex64::from(t), ..self.clone() };
        next.project();
        next
    }
}

/// `||H_d + H_r Θ G||_F^2`.
pub fn sum_channel_gain(ch: &ChannelSet, theta: &ScatteringMatrix) -> Result<f64> {
    Ok(effective_channel_matrix(ch, theta.matrix())?.norm_squared())
}

/// Sum over users of `log det(I + H_k W_k W_k^H H_k^H Q_{-k}^{-1})` in nats.
pub fn sum_rate(ch: &ChannelSet, w: &Beamformer, theta: &ScatteringMatrix) -> Result<f64> {
    let eff = effective_channel_matrix(ch, theta.matrix())?;
    Ok(user_rates(&eff, ch, w)?.iter().sum())
}

/// Per-user rates in nats for effective channel `eff`.
pub fn user_rates(eff: &CMatrix, ch: &ChannelSet, w: &Beamformer) -> Result<Vec<f64>> {
    Ok(RateTerms::new(eff, ch, w)?.rates)
}

fn logdet_hpd(q: &CMatrix, user: usize) -> Result<(f64, CMatrix)> {
    let chol = Cholesky::new(q.clone()).ok_or(Error::SingularInterference { user })?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
    Ok((logdet, chol.inverse()))
}

/// Per-user covariance inverses shared by the rate and its gradients.
struct RateTerms {
    rates: Vec<f64>,
    /// `Q_k^{-1}` and `Q_{-k}^{-1}` per user.
    inv_full: Vec<CMatrix>,
    inv_interf: Vec<CMatrix>,
}

impl RateTerms {
    fn new(eff: &CMatrix, ch: &ChannelSet, bf: &Beamformer) -> Result<Self> {
        if bf.w.nrows() != eff.ncols() || bf.streams.len() != ch.n_users() {
            return Err(Error::dims("precoder does not match the channel"));
        }
        let s = &bf.w * bf.w.adjoint();
        let mut rates = Vec::with_capacity(ch.n_users());
        let mut inv_full = Vec::with_capacity(ch.n_users());
        let mut inv_interf = Vec::with_capacity(ch.n_users());
        let mut col = 0;
        for k in 0..ch.n_users() {
            let rows = ch.user_rows(k);
            let hk = eff.rows(rows.start, rows.len()).into_owned();
            let wk = bf.w.columns(col, bf.streams[k]);
            col += bf.streams[k];
            let noise = CMatrix::identity(rows.len(), rows.len()) * Complex64::from(ch.noise_power);
            let q_full = &hk * &s * hk.adjoint() + &noise;
            let own = &hk * wk;
            let q_interf = &q_full - &own * own.adjoint();
            let (ld_full, inv_f) = logdet_hpd(&q_full, k)?;
            let (ld_interf, inv_i) = logdet_hpd(&q_interf, k)?;
            rates.push(ld_full - ld_interf);
            inv_full.push(inv_f);
            inv_interf.push(inv_i);
        }
        Ok(Self { rates, inv_full, inv_interf })
    }

    /// `[A_1 ... A_K]` with `A_k = S H_k^H Q_k^{-1} - S_{-k} H_k^H Q_{-k}^{-1}`,
    /// so that `d(sum rate) = 2 Re tr(A dE)` for effective-channel changes `dE`.
    fn channel_sensitivity(&self, eff: &CMatrix, ch: &ChannelSet, bf: &Beamformer) -> CMatrix {
        let s = &bf.w * bf.w.adjoint();
        let mut out = CMatrix::zeros(eff.ncols(), eff.nrows());
        let mut col = 0;
        for k in 0..ch.n_users() {
            let rows = ch.user_rows(k);
            let hk_h = eff.rows(rows.start, rows.len()).adjoint();
            let wk = bf.w.columns(col, bf.streams[k]);
            col += bf.streams[k];
            let s_minus = &s - wk * wk.adjoint();
            let a = &s * &hk_h * &self.inv_full[k] - s_minus * &hk_h * &self.inv_interf[k];
            out.columns_mut(rows.start, rows.len()).copy_from(&a);
        }
        out
    }

    /// Ascent direction `dR/dW*` scaled by 2 (the real gradient).
    fn beamformer_gradient(&self, eff: &CMatrix, ch: &ChannelSet, bf: &Beamformer) -> CMatrix {
        let mut grad = CMatrix::zeros(bf.w.nrows(), bf.w.ncols());
        let mut col = 0;
        for k in 0..ch.n_users() {
            let rows = ch.user_rows(k);
            let hk = eff.rows(rows.start, rows.len());
            let dk = bf.streams[k];
            let mut w_minus = bf.w.clone();
            w_minus.columns_mut(col, dk).fill(Complex64::new(0.0, 0.0));
            col += dk;
            grad += (hk.adjoint() * &self.inv_full[k] * hk * &bf.w - hk.adjoint() * &self.inv_interf[k] * hk * w_minus)
                * Complex64::from(2.0);
        }
        grad
    }
}

/// Objective value and gradient with respect to the free parameters.
struct Evaluator<'a> {
    ch: &'a ChannelSet,
    index: VarIndex,
    z0: f64,
    objective: Objective,
}

struct Evaluation {
    value: f64,
    /// Gradient with respect to `x` (siemens).
    grad: RVector,
    eff: CMatrix,
}

impl<'a> Evaluator<'a> {
    fn new(ch: &'a ChannelSet, arch: &Architecture, z0: f64, objective: Objective) -> Result<Self> {
        if arch.n_elements() != ch.n_ris() {
            return Err(Error::dims(format!(
                "architecture has {} ports, channel has {}",
                arch.n_elements(),
                ch.n_ris()
            )));
        }
        Ok(Self { ch, index: VarIndex::new(arch), z0, objective })
    }

    fn theta(&self, x: &RVector) -> Result<CMatrix> {
        Ok(theta_from_matrix(&self.index.to_matrix(x), self.z0)?.into_matrix())
    }

    fn value(&self, x: &RVector, bf: Option<&Beamformer>) -> Result<f64> {
        let eff = effective_channel_matrix(self.ch, &self.theta(x)?)?;
        self.value_at(&eff, bf)
    }

    fn value_at(&self, eff: &CMatrix, bf: Option<&Beamformer>) -> Result<f64> {
        let v = match self.objective {
            Objective::SumChannelGain => eff.norm_squared(),
            Objective::SumRate => {
                let bf = bf.ok_or_else(|| Error::invalid("sum rate needs a beamformer"))?;
                RateTerms::new(eff, self.ch, bf)?.rates.iter().sum()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    fn evaluate(&self, x: &RVector, bf: Option<&Beamformer>) -> Result<Evaluation> {
        let n = self.ch.n_ris();
        let b = self.index.to_matrix(x);
        let t = CMatrix::identity(n, n) + b.map(|v| I * (self.z0 * v));
        let t_inv = t.lu().try_inverse().ok_or(Error::IllConditioned { residual: f64::INFINITY })?;
        let theta = &t_inv * Complex64::from(2.0) - CMatrix::identity(n, n);
        let eff = effective_channel_matrix(self.ch, &theta)?;
        let (value, sens) = match self.objective {
            Objective::SumChannelGain => (eff.norm_squared(), eff.adjoint()),
            Objective::SumRate => {
                let bf = bf.ok_or_else(|| Error::invalid("sum rate needs a beamformer"))?;
                let terms = RateTerms::new(&eff, self.ch, bf)?;
                (terms.rates.iter().sum(), terms.channel_sensitivity(&eff, self.ch, bf))
            }
        };
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        // df = 2 Re tr(C dΘ), C = G A H_r, dΘ = -2i Z0 T^{-1} dB T^{-1}
        let left = &t_inv * &self.ch.g;
        let right = &self.ch.h_r * &t_inv;
        let k = (left * sens * right) * (I * (-4.0 * self.z0));
        let grad = RVector::from_iterator(
            self.index.len(),
            self.index.pairs().iter().map(|&(i, j)| if i == j { k[(i, i)].re } else { k[(i, j)].re + k[(j, i)].re }),
        );
        Ok(Evaluation { value, grad, eff })
    }
}

/// Objective at free parameters `x`; `w` is required for the sum rate.
pub fn objective_value(
    objective: Objective,
    ch: &ChannelSet,
    w: Option<&Beamformer>,
    arch: &Architecture,
    x: &RVector,
    z0: f64,
) -> Result<f64> {
    Evaluator::new(ch, arch, z0, objective)?.value(x, w)
}

/// Analytic gradient of the objective with respect to the free
/// susceptances `x` of `arch`.
pub fn gradient_free_params(
    objective: Objective,
    ch: &ChannelSet,
    w: Option<&Beamformer>,
    arch: &Architecture,
    x: &RVector,
    z0: f64,
) -> Result<RVector> {
    let ev = Evaluator::new(ch, arch, z0, objective)?;
    if x.len() != ev.index.len() {
        return Err(Error::dims(format!("{} parameters for {} free entries", x.len(), ev.index.len())));
    }
    Ok(ev.evaluate(x, w)?.grad)
}

/// Real gradient of the sum rate with respect to `W`, as a complex matrix
/// `G` with `d(sum rate) = Re tr(G^H dW)`.
pub fn gradient_beamformer(ch: &ChannelSet, w: &Beamformer, theta: &ScatteringMatrix) -> Result<CMatrix> {
    let eff = effective_channel_matrix(ch, theta.matrix())?;
    let terms = RateTerms::new(&eff, ch, w)?;
    Ok(terms.beamformer_gradient(&eff, ch, w))
}

/// Starting point supplied by the caller, e.g. the optimum of a
/// sub-architecture. `b` must be supported on the target architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub b: RMatrix,
    pub w: Option<CMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeOptions {
    /// Random restarts, including the one from `B = 0`.
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when an accepted step improves the value by less than
    /// `tol * |value|`.
    pub tol: f64,
    pub seed: u64,
    /// Standard deviation of the normalized starting entries `Z0 B`.
    pub init_scale: f64,
    /// Transmit power budget in watts (sum rate only).
    pub power_budget: f64,
    /// Streams per user (sum rate only); defaults to one per receive antenna.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub streams: Option<Vec<usize>>,
    pub z0: f64,
    #[serde(skip)]
    pub warm_starts: Vec<WarmStart>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 300,
            tol: 1e-10,
            seed: 0,
            init_scale: 1.0,
            power_budget: crate::channel::dbm_to_watts(10.0),
            streams: None,
            z0: DEFAULT_Z0,
            warm_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub susceptance: SusceptanceMatrix,
    pub theta: ScatteringMatrix,
    pub beamformer: Option<Beamformer>,
    pub value: f64,
    /// Value after each accepted step of the winning start.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Index of the winning start: random restarts first, then warm starts.
    pub start_index: usize,
}

const LBFGS_MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

struct Run {
    x: RVector,
    bf: Option<Beamformer>,
    value: f64,
    trace: Vec<f64>,
    iterations: usize,
}

/// Maximizes the objective over susceptances supported on `arch` (and the
/// precoder for the sum rate), returning the best of all starts.
pub fn optimize_architecture(
    ch: &ChannelSet,
    arch: &Architecture,
    objective: Objective,
    opts: &OptimizeOptions,
) -> Result<OptimizeResult> {
    if opts.restarts == 0 && opts.warm_starts.is_empty() {
        return Err(Error::invalid("need at least one restart"));
    }
    let ev = Evaluator::new(ch, arch, opts.z0, objective)?;
    let n_vars = ev.index.len();

    let mut starts: Vec<(RVector, Option<CMatrix>)> = (0..opts.restarts)
        .map(|r| {
            if r == 0 {
                (RVector::zeros(n_vars), None)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, r as u64));
                let scale = opts.init_scale / opts.z0;
                (RVector::from_fn(n_vars, |_, _| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng)), None)
            }
        })
        .collect();
    for ws in &opts.warm_starts {
        let b = SusceptanceMatrix::new(ws.b.clone(), arch.clone())?;
        starts.push((b.params(), ws.w.clone()));
    }

    let runs: Vec<Result<Run>> = starts.into_par_iter().map(|(x0, w0)| run_start(&ev, ch, opts, x0, w0)).collect();
    let mut best: Option<(usize, Run)> = None;
    for (idx, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.value > b.value) {
            best = Some((idx, run));
        }
    }
    let (start_index, run) = best.expect("at least one start");
    let susceptance = SusceptanceMatrix::from_params(arch.clone(), &run.x)?;
    let theta = theta_from_matrix(susceptance.matrix(), opts.z0)?;
    Ok(OptimizeResult {
        susceptance,
        theta,
        beamformer: run.bf,
        value: run.value,
        trace: run.trace,
        iterations: run.iterations,
        start_index,
    })
}

fn run_start(ev: &Evaluator, ch: &ChannelSet, opts: &OptimizeOptions, x0: RVector, w0: Option<CMatrix>) -> Result<Run> {
    let z0 = opts.z0;
    let mut y = x0 * z0;
    let to_x = |y: &RVector| y / z0;

    let mut bf = if ev.objective.uses_beamformer() {
        let streams = opts.streams.clone().unwrap_or_else(|| ch.user_dims.clone());
        Some(match w0 {
            Some(w) => Beamformer::new(w, opts.power_budget, streams)?,
            None => {
                let eff = effective_channel_matrix(ch, &ev.theta(&to_x(&y))?)?;
                Beamformer::matched(&eff, &ch.user_dims, &streams, opts.power_budget)?
            }
        })
    } else {
        None
    };

    let mut cur = ev.evaluate(&to_x(&y), bf.as_ref())?;
    let mut g = &cur.grad / z0;
    let mut trace = vec![cur.value];
    let mut memory: VecDeque<(RVector, RVector)> = VecDeque::new();
    let mut w_step = 0.0;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        iterations += 1;
        let start_value = cur.value;

        if let Some(current_bf) = bf.as_ref() {
            let terms = RateTerms::new(&cur.eff, ch, current_bf)?;
            let gw = terms.beamformer_gradient(&cur.eff, ch, current_bf);
            let gnorm = gw.norm();
            if gnorm > 0.0 {
                if w_step == 0.0 {
                    w_step = 0.1 * current_bf.w.norm().max(opts.power_budget.sqrt()) / gnorm;
                }
                let mut t = w_step;
                for _ in 0..MAX_BACKTRACKS {
                    let cand = current_bf.stepped(&gw, t);
                    let delta = &cand.w - &current_bf.w;
                    let predicted = gw.iter().zip(delta.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
                    let value = ev.value_at(&cur.eff, Some(&cand)).unwrap_or(f64::NEG_INFINITY);
                    if value > cur.value && value >= cur.value + ARMIJO * predicted {
                        bf = Some(cand);
                        w_step = 2.0 * t;
                        cur = ev.evaluate(&to_x(&y), bf.as_ref())?;
                        g = &cur.grad / z0;
                        trace.push(cur.value);
                        break;
                    }
                    t *= 0.5;
                }
            }
        }

        let mut d = lbfgs_direction(&g, &memory);
        let mut slope = g.dot(&d);
        if slope.is_nan() || slope <= 0.0 {
            memory.clear();
            d = g.clone();
            slope = g.dot(&d);
        }
        if slope.is_nan() || slope <= 0.0 {
            break;
        }
        let mut t = if memory.is_empty() { 0.5 / d.norm() } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let y_new = &y + &d * t;
            if let Ok(next) = ev.evaluate(&to_x(&y_new), bf.as_ref()) {
                if next.value > cur.value && next.value >= cur.value + ARMIJO * t * slope {
                    accepted = Some((y_new, next));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((y_new, next)) = accepted else {
            if !memory.is_empty() || cur.value > start_value {
                memory.clear();
                continue;
            }
            break;
        };
        let g_new = &next.grad / z0;
        let s = &y_new - &y;
        let yk = -(&g_new - &g);
        let sy = s.dot(&yk);
        if sy > 1e-12 * s.norm() * yk.norm() {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, yk));
        }
        y = y_new;
        g = g_new;
        cur = next;
        trace.push(cur.value);

        if cur.value - start_value <= opts.tol * cur.value.abs() {
            break;
        }
    }

    Ok(Run { x: to_x(&y), bf, value: cur.value, trace, iterations })
}

/// Two-loop recursion for minimizing `-f`: returns `H g` where `H`
/// approximates the inverse Hessian of `-f`.
fn lbfgs_direction(g: &RVector, memory: &VecDeque<(RVector, RVector)>) -> RVector {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let rho = 1.0 / y.dot(s);
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push((a, rho));
    }
    if let Some((s, y)) = memory.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y), (a, rho)) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    q
}

/// Result of reproducing a fully-connected optimum on a sparser circuit.
#[derive(Debug, Clone)]
pub struct Equalized {
    pub susceptance: SusceptanceMatrix,
    pub theta: ScatteringMatrix,
    pub value: f64,
    pub side: Side,
    pub residual: f64,
    pub conditioning: f64,
}

/// Reconstructs the fully-connected optimum `fully` on `arch` and
/// re-evaluates the objective with the same precoder.
///
/// The side is the receiver when `sum N_k <= N_T` and the transmitter
/// otherwise.
pub fn equalize_by_reconstruction(
    ch: &ChannelSet,
    arch: &Architecture,
    objective: Objective,
    fully: &OptimizeResult,
) -> Result<Equalized> {
    let side = if ch.total_rx() <= ch.n_tx() { Side::Receiver } else { Side::Transmitter };
    let z0 = fully.theta.z0();
    let target = make_target(ch, &fully.theta, side)?;
    let sys = assemble_system(&real_pair(&target, z0), arch)?;
    let sol = solve_detailed(&sys, SOLVE_TOL)?;
    let theta = theta_from_matrix(sol.susceptance.matrix(), z0)?;
    let value = match objective {
        Objective::SumChannelGain => sum_channel_gain(ch, &theta)?,
        Objective::SumRate => {
            let bf = fully.beamformer.as_ref().ok_or_else(|| Error::invalid("sum-rate result without a precoder"))?;
            sum_rate(ch, bf, &theta)?
        }
    };
    Ok(Equalized {
        susceptance: sol.susceptance,
        theta,
        value,
        side,
        residual: sol.residual,
        conditioning: sol.conditioning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channels, ScenarioConfig};
    use crate::network::random_susceptance;
    use crate::topology::SystemDims;
    use rand::Rng;

    fn channels(n_ris: usize, n_tx: usize, users: Vec<usize>, seed: u64) -> ChannelSet {
        let cfg = ScenarioConfig { dims: SystemDims::new(n_tx, n_ris, users), seed, ..Default::default() };
        sample_channels(&cfg).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gain_without_ris_link() {
        let mut ch = channels(4, 2, vec![1, 1], 1);
        ch.h_d = CMatrix::from_element(2, 2, c(1.0, 1.0));
        ch.h_r.fill(c(0.0, 0.0));
        let theta = crate::network::sample_symmetric_unitary(4, 3);
        assert!((sum_channel_gain(&ch, &theta).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_rate() {
        let ch = ChannelSet::new(
            CMatrix::from_element(1, 1, c(0.0, 0.0)),
            CMatrix::from_element(1, 1, c(0.0, 0.0)),
            CMatrix::from_element(1, 1, c(0.3, -0.4)),
            vec![1],
            0.1,
        )
        .unwrap();
        let w = Beamformer::new(CMatrix::from_element(1, 1, c(0.6, 0.8)), 1.0, vec![1]).unwrap();
        let theta = ScatteringMatrix::identity(1, 50.0);
        let expected = (1.0f64 + 0.25 / 0.1).ln();
        assert!((sum_rate(&ch, &w, &theta).unwrap() - expected).abs() < 1e-14);
        let zero = Beamformer::new(CMatrix::zeros(1, 1), 1.0, vec![1]).unwrap();
        assert_eq!(sum_rate(&ch, &zero, &theta).unwrap(), 0.0);
    }

    #[test]
    fn two_user_rate_matches_sinr() {
        let mut ch = channels(4, 3, vec![1, 1], 2);
        ch.noise_power = 1e-9;
        let theta = crate::network::sample_symmetric_unitary(4, 5);
        let eff = effective_channel_matrix(&ch, theta.matrix()).unwrap();
        let w = Beamformer::matched(&eff, &[1, 1], &[1, 1], 0.01).unwrap();
        let mut expected = 0.0;
        for k in 0..2 {
            let h = eff.row(k);
            let sig = (h * w.matrix().column(k))[(0, 0)].norm_sqr();
            let int = (h * w.matrix().column(1 - k))[(0, 0)].norm_sqr();
            expected += (1.0 + sig / (int + ch.noise_power)).ln();
        }
        let got = sum_rate(&ch, &w, &theta).unwrap();
        assert!((got - expected).abs() < 1e-10 * expected, "{got} vs {expected}");
    }

    fn finite_difference(
        objective: Objective,
        ch: &ChannelSet,
        w: Option<&Beamformer>,
        arch: &Architecture,
        x: &RVector,
    ) -> RVector {
        RVector::from_fn(x.len(), |i, _| {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fp = objective_value(objective, ch, w, arch, &xp, DEFAULT_Z0).unwrap();
            let fm = objective_value(objective, ch, w, arch, &xm, DEFAULT_Z0).unwrap();
            (fp - fm) / (2.0 * h)
        })
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ch = channels(6, 3, vec![1, 2], 3);
        let arch = Architecture::band(6, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_susceptance(&arch, 1.0 / DEFAULT_Z0, &mut rng);
        let x = b.params();
        let theta = theta_from_matrix(b.matrix(), DEFAULT_Z0).unwrap();
        let eff = effective_channel_matrix(&ch, theta.matrix()).unwrap();
        let w = Beamformer::matched(&eff, &[1, 2], &[1, 2], 0.01).unwrap();
        for (objective, bf) in [(Objective::SumChannelGain, None), (Objective::SumRate, Some(&w))] {
            let g = gradient_free_params(objective, &ch, bf, &arch, &x, DEFAULT_Z0).unwrap();
            let fd = finite_difference(objective, &ch, bf, &arch, &x);
            assert!((&g - &fd).norm() <= 1e-5 * fd.norm(), "{objective:?}");
        }
    }

    #[test]
    fn beamformer_gradient_matches_finite_differences() {
        let ch = channels(4, 3, vec![1, 1], 6);
        let theta = crate::network::sample_symmetric_unitary(4, 7);
        let eff = effective_channel_matrix(&ch, theta.matrix()).unwrap();
        let w = Beamformer::matched(&eff, &[1, 1], &[1, 1], 0.01).unwrap();
        let g = gradient_beamformer(&ch, &w, &theta).unwrap();
        let h = 1e-7;
        for idx in 0..w.matrix().len() {
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut wp = w.matrix().clone();
                let mut wm = w.matrix().clone();
                wp[idx] += dir * h;
                wm[idx] -= dir * h;
                let f = |m: CMatrix| sum_rate(&ch, &Beamformer { w: m, ..w.clone() }, &theta).unwrap();
                let fd = (f(wp) - f(wm)) / (2.0 * h);
                let an = (g[idx].conj() * dir).re;
                assert!((fd - an).abs() <= 1e-5 * g.norm(), "{fd} vs {an}");
            }
        }
    }

    #[test]
    fn constant_objective_has_zero_gradient() {
        let mut ch = channels(4, 2, vec![1], 8);
        ch.h_r.fill(c(0.0, 0.0));
        let arch = Architecture::fully(4).unwrap();
        let x = RVector::from_element(10, 0.01);
        let g = gradient_free_params(Objective::SumChannelGain, &ch, None, &arch, &x, DEFAULT_Z0).unwrap();
        assert_eq!(g.amax(), 0.0);
    }

    #[test]
    fn fully_connected_reaches_rank_one_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let randc = |rng: &mut ChaCha8Rng, r: usize, cc: usize| {
            CMatrix::from_fn(r, cc, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        };
        let g = randc(&mut rng, 4, 1) * randc(&mut rng, 1, 2);
        let h_r = randc(&mut rng, 2, 1) * randc(&mut rng, 1, 4);
        let ch = ChannelSet::new(g.clone(), h_r.clone(), CMatrix::zeros(2, 2), vec![1, 1], 1.0).unwrap();
        let bound = (h_r.singular_values().max() * g.singular_values().max()).powi(2);
        let opts = OptimizeOptions { restarts: 8, ..Default::default() };
        let res =
            optimize_architecture(&ch, &Architecture::fully(4).unwrap(), Objective::SumChannelGain, &opts).unwrap();
        assert!(res.value <= bound * (1.0 + 1e-9));
        assert!(res.value >= 0.99 * bound, "{} vs {bound}", res.value);
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn nested_architectures_with_warm_start() {
        let ch = channels(6, 2, vec![1, 1], 10);
        let opts = OptimizeOptions { restarts: 2, max_iters: 100, ..Default::default() };
        for objective in [Objective::SumChannelGain, Objective::SumRate] {
            let single = optimize_architecture(&ch, &Architecture::single(6).unwrap(), objective, &opts).unwrap();
            let warm = OptimizeOptions {
                warm_starts: vec![WarmStart {
                    b: single.susceptance.matrix().clone(),
                    w: single.beamformer.as_ref().map(|b| b.matrix().clone()),
                }],
                ..opts.clone()
            };
            let fully = optimize_architecture(&ch, &Architecture::fully(6).unwrap(), objective, &warm).unwrap();
            assert!(single.value <= fully.value + 1e-9 * fully.value.abs());
            if let Some(bf) = &fully.beamformer {
                assert!(bf.power() <= opts.power_budget * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn equalize_identity_optimum() {
        let ch = channels(6, 2, vec![1, 1], 11);
        let fully_arch = Architecture::fully(6).unwrap();
        let theta = ScatteringMatrix::identity(6, DEFAULT_Z0);
        let value = sum_channel_gain(&ch, &theta).unwrap();
        let fully = OptimizeResult {
            susceptance: SusceptanceMatrix::zeros(fully_arch),
            theta,
            beamformer: None,
            value,
            trace: vec![value],
            iterations: 0,
            start_index: 0,
        };
        let eq = equalize_by_reconstruction(&ch, &Architecture::band(6, 3).unwrap(), Objective::SumChannelGain, &fully)
            .unwrap();
        assert_eq!(eq.susceptance.matrix(), &RMatrix::zeros(6, 6));
        assert_eq!(eq.value, value);
        assert_eq!(eq.side, Side::Receiver);
    }

    #[test]
    fn equalize_matches_fully_connected() {
        let ch = channels(8, 4, vec![1, 1], 12);
        let opts = OptimizeOptions { restarts: 1, max_iters: 50, ..Default::default() };
        let fully = optimize_architecture(&ch, &Architecture::fully(8).unwrap(), Objective::SumRate, &opts).unwrap();
        let eq =
            equalize_by_reconstruction(&ch, &Architecture::band(8, 3).unwrap(), Objective::SumRate, &fully).unwrap();
        assert!((eq.value - fully.value).abs() <= 1e-6 * fully.value.abs());
    }
}
