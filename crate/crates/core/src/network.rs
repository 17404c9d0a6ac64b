//! Lossless reciprocal multiport networks: susceptance and scattering
//! matrices and the Cayley map between them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, singular_values, CMatrix, RMatrix, RVector, I};
use crate::topology::Architecture;

/// Reference impedance in ohms.
pub const DEFAULT_Z0: f64 = 50.0;

const SOLVE_RESIDUAL_TOL: f64 = 1e-8;
const CAYLEY_SINGULAR_TOL: f64 = 1e-10;

/// Column layout of the free susceptance parameters: one column per
/// diagonal entry and per edge, ordered row-major over `n <= m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
}

impl VarIndex {
    pub fn new(arch: &Architecture) -> Self {
        let n = arch.n_elements();
        let mut pairs = Vec::new();
        let mut lookup = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                if i == j || arch.is_connected(i, j) {
                    lookup[i * n + j] = Some(pairs.len());
                    lookup[j * n + i] = Some(pairs.len());
                    pairs.push((i, j));
                }
            }
        }
        Self { n, pairs, lookup }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_elements(&self) -> usize {
        self.n
    }

    /// Port pairs `(n, m)` with `n <= m`, in column order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Column of the unordered pair `{i, j}`, if it is a free parameter.
    pub fn column(&self, i: usize, j: usize) -> Option<usize> {
        self.lookup[i * self.n + j]
    }

    /// Symmetric matrix with the given free parameters.
    pub fn to_matrix(&self, x: &RVector) -> RMatrix {
        let mut b = RMatrix::zeros(self.n, self.n);
        for (&(i, j), &v) in self.pairs.iter().zip(x.iter()) {
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
        b
    }

    /// Reads the free parameters out of a symmetric matrix.
    pub fn to_params(&self, b: &RMatrix) -> RVector {
        RVector::from_iterator(self.pairs.len(), self.pairs.iter().map(|&(i, j)| b[(i, j)]))
    }
}

/// Real symmetric susceptance matrix `B` (siemens) supported on an
/// architecture graph plus its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptanceMatrix {
    b: RMatrix,
    arch: Architecture,
}

impl SusceptanceMatrix {
    /// Validates symmetry (to `1e-12` relative) and the support constraint.
    /// The stored matrix is exactly symmetric.
    pub fn new(b: RMatrix, arch: Architecture) -> Result<Self> {
        let n = arch.n_elements();
        if b.shape() != (n, n) {
            return Err(Error::dims(format!("susceptance is {}x{}, architecture has {n} ports", b.nrows(), b.ncols())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if asymmetry(&b) > 1e-12 * b.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("susceptance matrix is not symmetric"));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && !arch.is_connected(i, j) && b[(i, j)] != 0.0 {
                    return Err(Error::invalid(format!(
                        "susceptance has entry at ({}, {}) outside the architecture",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let b = (&b + b.transpose()) * 0.5;
        Ok(Self { b, arch })
    }

    pub fn zeros(arch: Architecture) -> Self {
        let n = arch.n_elements();
        Self { b: RMatrix::zeros(n, n), arch }
    }

    pub fn from_params(arch: Architecture, x: &RVector) -> Result<Self> {
        let index = VarIndex::new(&arch);
        if x.len() != index.len() {
            return Err(Error::dims(format!("{} parameters for {} free entries", x.len(), index.len())));
        }
        Ok(Self { b: index.to_matrix(x), arch })
    }

    /// Dense symmetric matrix on the fully-connected graph.
    pub fn fully(b: RMatrix) -> Result<Self> {
        let arch = Architecture::fully(b.nrows())?;
        Self::new(b, arch)
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.b
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn n_elements(&self) -> usize {
        self.b.nrows()
    }

    pub fn params(&self) -> RVector {
        VarIndex::new(&self.arch).to_params(&self.b)
    }
}

/// Complex symmetric unitary scattering matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    theta: CMatrix,
    z0: f64,
}

impl ScatteringMatrix {
    pub fn identity(n: usize, z0: f64) -> Self {
        Self { theta: CMatrix::identity(n, n), z0 }
    }

    /// Wraps a matrix without checking unitarity or symmetry.
    pub fn from_matrix_unchecked(theta: CMatrix, z0: f64) -> Self {
        Self { theta, z0 }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.theta
    }

    pub fn into_matrix(self) -> CMatrix {
        self.theta
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }

    pub fn n_elements(&self) -> usize {
        self.theta.nrows()
    }

    /// `||Θ Θ^H - I||_F`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.theta.nrows();
        (&self.theta * self.theta.adjoint() - CMatrix::identity(n, n)).norm()
    }

    /// `||Θ - Θ^T||_F / ||Θ||_F`.
    pub fn relative_asymmetry(&self) -> f64 {
        asymmetry(&self.theta) / self.theta.norm().max(f64::MIN_POSITIVE)
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_json_rows(&self) -> Vec<Vec<[f64; 2]>> {
        let (r, c) = self.theta.shape();
        (0..r).map(|i| (0..c).map(|j| [self.theta[(i, j)].re, self.theta[(i, j)].im]).collect()).collect()
    }
}

impl Serialize for ScatteringMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_rows().serialize(s)
    }
}

fn i_z0_b(b: &RMatrix, z0: f64) -> CMatrix {
    b.map(|v| I * (z0 * v))
}

/// `Θ = (I + iZ0 B)^{-1} (I - iZ0 B)`, via an LU solve.
pub fn theta_from_susceptance(b: &SusceptanceMatrix, z0: f64) -> Result<ScatteringMatrix> {
    theta_from_matrix(b.matrix(), z0)
}

/// Cayley map for a bare real symmetric matrix.
pub fn theta_from_matrix(b: &RMatrix, z0: f64) -> Result<ScatteringMatrix> {
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(Error::invalid(format!("reference impedance must be positive, got {z0}")));
    }
    let n = b.nrows();
    let eye = CMatrix::identity(n, n);
    let jb = i_z0_b(b, z0);
    let lhs = &eye + &jb;
    let rhs = &eye - &jb;
    let x = lhs.clone().lu().solve(&rhs).ok_or(Error::IllConditioned { residual: f64::INFINITY })?;
    let residual = (&lhs * &x - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    if residual.is_nan() || residual > SOLVE_RESIDUAL_TOL {
        return Err(Error::IllConditioned { residual });
    }
    let theta = (&x + x.transpose()).map(|v| v * 0.5);
    Ok(ScatteringMatrix { theta, z0 })
}

/// Inverse Cayley map onto the fully-connected support.
pub fn susceptance_from_theta(theta: &ScatteringMatrix) -> Result<SusceptanceMatrix> {
    let b = matrix_from_theta(theta.matrix(), theta.z0())?;
    SusceptanceMatrix::fully(b)
}

/// `B = Re((I - Θ)(I + Θ)^{-1} / (iZ0))`, symmetrized.
pub fn matrix_from_theta(theta: &CMatrix, z0: f64) -> Result<RMatrix> {
    let n = theta.nrows();
    if theta.ncols() != n {
        return Err(Error::dims("scattering matrix must be square"));
    }
    let eye = CMatrix::identity(n, n);
    let plus = &eye + theta;
    let sigma_min = singular_values(&plus).last().copied().unwrap_or(f64::INFINITY);
    if n > 0 && sigma_min < CAYLEY_SINGULAR_TOL {
        return Err(Error::SingularCayley { sigma_min });
    }
    // (I + Θ) and (I - Θ) commute, so either solve order gives the same X.
    let x = plus.lu().solve(&(&eye - theta)).ok_or(Error::SingularCayley { sigma_min })?;
    let b = x.map(|v| v.im / z0);
    Ok((&b + b.transpose()) * 0.5)
}

/// Dense real symmetric matrix with standard-normal entries (upper triangle
/// drawn, then mirrored) multiplied by `scale`.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> RMatrix {
    let mut b = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.sample(StandardNormal);
            b[(i, j)] = scale * v;
            b[(j, i)] = scale * v;
        }
    }
    b
}

/// Random susceptance supported on `arch`.
pub fn random_susceptance<R: Rng + ?Sized>(arch: &Architecture, scale: f64, rng: &mut R) -> SusceptanceMatrix {
    let index = VarIndex::new(arch);
    let x = RVector::from_fn(index.len(), |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    SusceptanceMatrix { b: index.to_matrix(&x), arch: arch.clone() }
}

/// Fully-connected-feasible scattering matrix from a Gaussian susceptance
/// with entry scale `1 / Z0`, using the default reference impedance.
pub fn sample_symmetric_unitary(n: usize, seed: u64) -> ScatteringMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_symmetric_unitary_with(n, DEFAULT_Z0, 1.0 / DEFAULT_Z0, &mut rng)
}

pub fn sample_symmetric_unitary_with<R: Rng + ?Sized>(n: usize, z0: f64, scale: f64, rng: &mut R) -> ScatteringMatrix {
    let b = random_symmetric(n, scale, rng);
    theta_from_matrix(&b, z0).expect("Cayley map of a moderate real symmetric matrix")
}

/// Largest `|Θ_ij|` over entries outside `mask(i, j)`.
pub fn max_off_support(theta: &CMatrix, mask: impl Fn(usize, usize) -> bool) -> f64 {
    let (r, c) = theta.shape();
    let mut worst = 0.0f64;
    for i in 0..r {
        for j in 0..c {
            if !mask(i, j) {
                worst = worst.max(theta[(i, j)].norm());
            }
        }
    }
    worst
}
