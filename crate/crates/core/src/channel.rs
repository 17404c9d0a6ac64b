//! Multiuser MIMO channel realizations with distance path loss and Rician
//! or Rayleigh small-scale fading.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::network::ScatteringMatrix;
use crate::topology::SystemDims;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// `10^(l0_db / 10) * d^(-alpha)`.
pub fn pathloss_linear(d: f64, l0_db: f64, alpha: f64) -> f64 {
    db_to_linear(l0_db) * d.powf(-alpha)
}

/// Deterministic per-index seed (splitmix64 finalizer over `base ^ index`
/// mixed with a fixed odd constant). Distinct indices give well separated
/// streams even for adjacent bases.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    #[default]
    Rician,
    Rayleigh,
}

/// One simulation scenario. Every field has a default; missing JSON keys
/// take it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dims: SystemDims,
    /// Transmitter to RIS, meters.
    pub d_tx_ris: f64,
    /// RIS to every user, meters.
    pub d_ris_user: f64,
    /// Transmitter to every user for the direct link; defaults to `d_tx_ris`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_tx_user: Option<f64>,
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    pub rician_factor_db: f64,
    pub fading: Fading,
    pub direct_blocked: bool,
    pub noise_dbm: f64,
    pub power_budget_dbm: f64,
    pub z0: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dims: SystemDims::new(4, 16, vec![1, 1, 1, 1]),
            d_tx_ris: 50.0,
            d_ris_user: 2.5,
            d_tx_user: None,
            pathloss_ref_db: -30.0,
            pathloss_exponent: 2.2,
            rician_factor_db: 2.0,
            fading: Fading::Rician,
            direct_blocked: true,
            noise_dbm: -80.0,
            power_budget_dbm: 10.0,
            z0: crate::network::DEFAULT_Z0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("d_tx_ris", self.d_tx_ris)?;
        positive("d_ris_user", self.d_ris_user)?;
        if let Some(d) = self.d_tx_user {
            positive("d_tx_user", d)?;
        }
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("z0", self.z0)?;
        for (name, v) in [
            ("pathloss_ref_db", self.pathloss_ref_db),
            ("rician_factor_db", self.rician_factor_db),
            ("noise_dbm", self.noise_dbm),
            ("power_budget_dbm", self.power_budget_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn power_budget(&self) -> f64 {
        dbm_to_watts(self.power_budget_dbm)
    }

    /// Linear Rician factor; zero under Rayleigh fading.
    pub fn rician_factor(&self) -> f64 {
        match self.fading {
            Fading::Rician => db_to_linear(self.rician_factor_db),
            Fading::Rayleigh => 0.0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// One channel realization. User `k` owns rows `user_rows(k)` of `h_r`
/// and `h_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `N_I x N_T`, transmitter to RIS.
    pub g: CMatrix,
    /// `(sum N_k) x N_I`, RIS to users.
    pub h_r: CMatrix,
    /// `(sum N_k) x N_T`, transmitter to users.
    pub h_d: CMatrix,
    pub user_dims: Vec<usize>,
    /// Noise power in watts.
    pub noise_power: f64,
}

impl ChannelSet {
    pub fn new(g: CMatrix, h_r: CMatrix, h_d: CMatrix, user_dims: Vec<usize>, noise_power: f64) -> Result<Self> {
        let rows: usize = user_dims.iter().sum();
        if h_r.nrows() != rows || h_d.nrows() != rows {
            return Err(Error::dims(format!("user rows {rows} vs h_r {} / h_d {}", h_r.nrows(), h_d.nrows())));
        }
        if h_r.ncols() != g.nrows() {
            return Err(Error::dims(format!("h_r has {} columns, G has {} rows", h_r.ncols(), g.nrows())));
        }
        if h_d.ncols() != g.ncols() {
            return Err(Error::dims(format!("h_d has {} columns, G has {}", h_d.ncols(), g.ncols())));
        }
        if noise_power.is_nan() || noise_power <= 0.0 {
            return Err(Error::invalid("noise power must be positive"));
        }
        Ok(Self { g, h_r, h_d, user_dims, noise_power })
    }

    pub fn n_ris(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.g.ncols()
    }

    pub fn n_users(&self) -> usize {
        self.user_dims.len()
    }

    pub fn total_rx(&self) -> usize {
        self.h_r.nrows()
    }

    pub fn user_rows(&self, k: usize) -> Range<usize> {
        let start: usize = self.user_dims[..k].iter().sum();
        start..start + self.user_dims[k]
    }
}

fn steering(n: usize, angle: f64) -> Vec<Complex64> {
    (0..n).map(|m| Complex64::from_polar(1.0, PI * m as f64 * angle.sin())).collect()
}

fn random_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-PI / 2.0..PI / 2.0)
}

/// Unit-modulus rank-one line-of-sight matrix `a_rx(φ_rx) a_tx(φ_tx)^H`.
fn los_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let a_rx = steering(rows, random_angle(rng));
    let a_tx = steering(cols, random_angle(rng));
    CMatrix::from_fn(rows, cols, |i, j| a_rx[i] * a_tx[j].conj())
}

fn nlos_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

/// `sqrt(pl) * (sqrt(κ/(1+κ)) H_los + sqrt(1/(1+κ)) H_nlos)`.
pub fn sample_link<R: Rng + ?Sized>(rows: usize, cols: usize, pathloss: f64, kappa: f64, rng: &mut R) -> CMatrix {
    let los_w = (kappa / (1.0 + kappa)).sqrt();
    let nlos_w = (1.0 / (1.0 + kappa)).sqrt();
    let nlos = nlos_matrix(rows, cols, rng);
    let mut h = nlos * Complex64::from(nlos_w);
    if kappa > 0.0 {
        h += los_matrix(rows, cols, rng) * Complex64::from(los_w);
    }
    h * Complex64::from(pathloss.sqrt())
}

/// Samples `G`, `H_r` (one LOS geometry per user) and `H_d` from `cfg.seed`.
pub fn sample_channels(cfg: &ScenarioConfig) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_channels_with(cfg, &mut rng)
}

pub fn sample_channels_with<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    cfg.validate()?;
    let dims = &cfg.dims;
    let kappa = cfg.rician_factor();
    let pl = |d: f64| pathloss_linear(d, cfg.pathloss_ref_db, cfg.pathloss_exponent);
    let total_rx = dims.total_rx();

    let g = sample_link(dims.n_ris, dims.n_tx, pl(cfg.d_tx_ris), kappa, rng);
    let mut h_r = CMatrix::zeros(total_rx, dims.n_ris);
    let mut row = 0;
    for &nk in &dims.users {
        let block = sample_link(nk, dims.n_ris, pl(cfg.d_ris_user), kappa, rng);
        h_r.rows_mut(row, nk).copy_from(&block);
        row += nk;
    }
    let mut h_d = CMatrix::zeros(total_rx, dims.n_tx);
    if !cfg.direct_blocked {
        let d = cfg.d_tx_user.unwrap_or(cfg.d_tx_ris);
        let mut row = 0;
        for &nk in &dims.users {
            let block = sample_link(nk, dims.n_tx, pl(d), kappa, rng);
            h_d.rows_mut(row, nk).copy_from(&block);
            row += nk;
        }
    }
    ChannelSet::new(g, h_r, h_d, dims.users.clone(), cfg.noise_power())
}

/// `H_d + H_r Θ G`.
pub fn effective_channel(ch: &ChannelSet, theta: &ScatteringMatrix) -> Result<CMatrix> {
    effective_channel_matrix(ch, theta.matrix())
}

pub fn effective_channel_matrix(ch: &ChannelSet, theta: &CMatrix) -> Result<CMatrix> {
    let n = ch.n_ris();
    if theta.shape() != (n, n) {
        return Err(Error::dims(format!(
            "scattering matrix is {}x{}, channel has {n} RIS ports",
            theta.nrows(),
            theta.ncols()
        )));
    }
    Ok(&ch.h_d + &ch.h_r * theta * &ch.g)
}
