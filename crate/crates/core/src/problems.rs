//! Heat-flow test systems and the preparation pipeline that brings any
//! `A x = b` into the solver's working form.
//!
//! Preparation pads to a power of two, normalizes the sign so the spectrum
//! lies in the right half-plane, rescales to unit spectral norm, rotates `b`
//! onto `e_1` with a Householder reflection and, when the matrix is not
//! positive, doubles the space with an ancilla qubit.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, basis_vector};
use crate::schedule::condition_number;

/// Domain length; the grid spacing is `LENGTH / N`.
pub const LENGTH: f64 = 1.0;

/// Sampled conductivities must exceed this fraction of the profile mean.
const MIN_CONDUCTIVITY_FRACTION: f64 = 0.01;
const RESAMPLE_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConductivityKind {
    Constant,
    NoisyConstant,
    Linear,
    NoisyLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityProfile {
    pub kind: ConductivityKind,
    /// Constant conductivity `lambda0`.
    pub lambda0: f64,
    /// Linear profile `lambda(z) = slope * z`.
    pub slope: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl ConductivityProfile {
    pub fn constant(lambda0: f64) -> Self {
        Self { kind: ConductivityKind::Constant, lambda0, slope: 2.0, sigma: 0.0, seed: 0 }
    }

    pub fn noisy_constant(lambda0: f64, sigma: f64, seed: u64) -> Self {
        Self { kind: ConductivityKind::NoisyConstant, lambda0, slope: 2.0, sigma, seed }
    }

    pub fn linear(slope: f64) -> Self {
        Self { kind: ConductivityKind::Linear, lambda0: 1.0, slope, sigma: 0.0, seed: 0 }
    }

    pub fn noisy_linear(slope: f64, sigma: f64, seed: u64) -> Self {
        Self { kind: ConductivityKind::NoisyLinear, lambda0: 1.0, slope, sigma, seed }
    }

    fn base(&self, z: f64) -> f64 {
        match self.kind {
            ConductivityKind::Constant | ConductivityKind::NoisyConstant => self.lambda0,
            ConductivityKind::Linear | ConductivityKind::NoisyLinear => self.slope * z / LENGTH,
        }
    }

    fn is_noisy(&self) -> bool {
        matches!(self.kind, ConductivityKind::NoisyConstant | ConductivityKind::NoisyLinear)
    }

    /// Conductivities at sites `z_i = i dz`, `i = 1..=n_sites`.
    pub fn sample(&self, n_sites: usize) -> Result<Vec<f64>> {
        let dz = LENGTH / n_sites as f64;
        let base: Vec<f64> = (1..=n_sites).map(|i| self.base(i as f64 * dz)).collect();
        if !self.is_noisy() || self.sigma == 0.0 {
            if let Some(bad) = base.iter().find(|&&l| l <= 0.0) {
                return Err(Error::Conductivity(format!("non-positive conductivity {bad}")));
            }
            return Ok(base);
        }
        let mean = base.iter().sum::<f64>() / n_sites as f64;
        let floor = MIN_CONDUCTIVITY_FRACTION * mean;
        let normal = Normal::new(0.0, self.sigma)
            .map_err(|e| Error::Conductivity(format!("invalid sigma {}: {e}", self.sigma)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        base.iter()
            .map(|&b| {
                for _ in 0..RESAMPLE_BUDGET {
                    let l = b + normal.sample(&mut rng);
                    if l > floor {
                        return Ok(l);
                    }
                }
                Err(Error::Conductivity(format!(
                    "no conductivity above {floor} after {RESAMPLE_BUDGET} draws around {b}"
                )))
            })
            .collect()
    }
}

/// Tridiagonal finite-difference operator for `d/dz (lambda df/dz)` on
/// `N = 2^n` sites with open boundaries. Conductivity outside the grid is
/// extended by its boundary value.
pub fn discretize_heat(profile: &ConductivityProfile, n_qubits: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = 1usize << n_qubits;
    let lambdas = profile.sample(n)?;
    Ok((heat_matrix(&lambdas), lambdas))
}

/// Assembles the operator from explicit site conductivities.
pub fn heat_matrix(lambdas: &[f64]) -> DMatrix<f64> {
    let n = lambdas.len();
    let dz = LENGTH / n as f64;
    let inv = 1.0 / (dz * dz);
    let lam = |i: isize| lambdas[i.clamp(0, n as isize - 1) as usize];
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let k = i as isize;
        let grad = (lam(k + 1) - lam(k - 1)) / 4.0;
        a[(i, i)] = -2.0 * lambdas[i] * inv;
        if i > 0 {
            a[(i, i - 1)] = (lambdas[i] + grad) * inv;
        }
        if i + 1 < n {
            a[(i, i + 1)] = (lambdas[i] - grad) * inv;
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Point,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Decay exponent `l` of `Q0 exp(-l z / L)`.
    pub l: f64,
    pub q0: f64,
}

impl SourceSpec {
    pub fn point() -> Self {
        Self { kind: SourceKind::Point, l: 0.0, q0: 1.0 }
    }

    pub fn exponential(l: f64) -> Self {
        Self { kind: SourceKind::Exponential, l, q0: 1.0 }
    }
}

/// Source vector on `2^n` sites, `b_j = Q0 exp(-j l dz / L)` for `j = 1..=N`.
pub fn build_source(spec: &SourceSpec, n_qubits: usize) -> DVector<f64> {
    let n = 1usize << n_qubits;
    match spec.kind {
        SourceKind::Point => basis_vector(n, 0) * spec.q0,
        SourceKind::Exponential => {
            let dz = LENGTH / n as f64;
            DVector::from_fn(n, |j, _| spec.q0 * (-((j + 1) as f64) * spec.l * dz / LENGTH).exp())
        }
    }
}

/// Heat system `A x = b` on `2^n` sites. The stationary equation puts the
/// source on the right with a minus sign, so `b = -Q`.
pub fn heat_system(
    profile: &ConductivityProfile,
    source: &SourceSpec,
    n_qubits: usize,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<f64>)> {
    let (a, lambdas) = discretize_heat(profile, n_qubits)?;
    let b = -build_source(source, n_qubits);
    Ok((a, b, lambdas))
}

/// Reflection `I - 2 v v^T / (v.v)` with `v = b/|b| - e_1`; maps `b/|b|` onto `e_1`.
pub fn householder(b: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = b.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let n = b.len();
    let mut v = b / norm;
    v[0] -= 1.0;
    let vv = v.norm_squared();
    if vv.sqrt() < 1e-12 {
        return Ok(DMatrix::identity(n, n));
    }
    Ok(DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    /// Eigenvalues with real part at or below this (after unit-norm scaling)
    /// make the matrix count as non-positive.
    pub positivity_tol: f64,
    pub allow_embedding: bool,
    /// Embed even when the matrix is positive.
    pub force_embedding: bool,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self { positivity_tol: 1e-10, allow_embedding: true, force_embedding: false }
    }
}

/// A linear system brought into working form `M x ~ e_1` together with
/// everything needed to map solutions back.
#[derive(Debug, Clone)]
pub struct PreparedSystem {
    /// Working operator; the homotopy is `A(s) = (1 - s) I + s M`.
    pub matrix: DMatrix<f64>,
    pub n_qubits: usize,
    pub embedded: bool,
    /// Householder reflection applied to the (padded) system.
    pub householder: DMatrix<f64>,
    /// Second reflection in the doubled space, when embedded.
    pub embedding_householder: Option<DMatrix<f64>>,
    pub kappa: f64,
    pub sign_flipped: bool,
    /// `M` (before embedding) equals `sign * S A S / scale`.
    pub scale: f64,
    /// Input system padded to a power of two.
    pub original_matrix: DMatrix<f64>,
    pub original_rhs: DVector<f64>,
    pub original_dim: usize,
}

impl PreparedSystem {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rhs(&self) -> DVector<f64> {
        basis_vector(self.dim(), 0)
    }

    /// Maps a working-basis vector back to a unit vector in the original basis.
    /// Embedded vectors are projected onto the `|+>` ancilla branch.
    pub fn recover(&self, working: &DVector<f64>) -> Result<DVector<f64>> {
        if working.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: working.len() });
        }
        let rotated = match &self.embedding_householder {
            Some(s2) => {
                let y = s2 * working;
                let half = y.len() / 2;
                (y.rows(0, half) + y.rows(half, half)) / std::f64::consts::SQRT_2
            }
            None => working.clone(),
        };
        let x = &self.householder * rotated;
        let norm = x.norm();
        if norm < 1e-300 {
            return Err(Error::ZeroVector);
        }
        Ok(x / norm)
    }

    /// Maps an original-basis vector into the working basis (`|+> (x)` branch when embedded).
    pub fn to_working(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.householder.nrows() {
            return Err(Error::DimensionMismatch { expected: self.householder.nrows(), actual: x.len() });
        }
        let y = &self.householder * x;
        let y = match &self.embedding_householder {
            Some(s2) => {
                let mut doubled = DVector::zeros(2 * y.len());
                doubled.rows_mut(0, y.len()).copy_from(&y);
                doubled.rows_mut(y.len(), y.len()).copy_from(&y);
                s2 * doubled / std::f64::consts::SQRT_2
            }
            None => y,
        };
        let norm = y.norm();
        Ok(y / norm)
    }
}

fn pad_to_power_of_two(a: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    let padded = n.next_power_of_two().max(2);
    if padded == n {
        return (a.clone(), b.clone());
    }
    let mut ap = DMatrix::identity(padded, padded);
    ap.view_mut((0, 0), (n, n)).copy_from(a);
    let mut bp = DVector::zeros(padded);
    bp.rows_mut(0, n).copy_from(b);
    (ap, bp)
}

/// Brings `A x = b` into working form.
pub fn prepare(a: &DMatrix<f64>, b: &DVector<f64>, opts: &PrepareOptions) -> Result<PreparedSystem> {
    let n = linalg::ensure_square(a)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    if b.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (a_pad, b_pad) = pad_to_power_of_two(a, b);
    let dim = a_pad.nrows();

    let sv = linalg::singular_values(&a_pad);
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    if !(sigma_max > 0.0) || sigma_min < 1e-14 * sigma_max {
        return Err(Error::Singular(format!("sigma_min/sigma_max = {:e}", sigma_min / sigma_max)));
    }

    let eig = linalg::eigenvalues(&a_pad)?;
    let sign_flipped = eig.iter().all(|z| z.re < 0.0);
    let sign = if sign_flipped { -1.0 } else { 1.0 };
    let a_norm = &a_pad * (sign / sigma_max);
    let b_signed = &b_pad * sign;

    let s = householder(&b_signed)?;
    let rotated = &s * &a_norm * &s;

    let positive = eig.iter().all(|z| sign * z.re / sigma_max > opts.positivity_tol);
    let embed = opts.force_embedding || !positive;
    if embed && !opts.allow_embedding {
        return Err(Error::EmbeddingDisabled);
    }

    let (matrix, embedding_householder) = if embed {
        // (1-s) sz(x)I + s sx(x)A, left-multiplied by sz(x)I, becomes
        // (1-s) I + s (sz sx)(x)A with right-hand side |->(x)e_1.
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let m = linalg::kron(&j, &rotated);
        let mut rhs = DVector::zeros(2 * dim);
        rhs[0] = std::f64::consts::FRAC_1_SQRT_2;
        rhs[dim] = -std::f64::consts::FRAC_1_SQRT_2;
        let s2 = householder(&rhs)?;
        (&s2 * m * &s2, Some(s2))
    } else {
        (rotated, None)
    };

    let kappa = condition_number(&matrix)?;
    let n_qubits = matrix.nrows().trailing_zeros() as usize;
    Ok(PreparedSystem {
        matrix,
        n_qubits,
        embedded: embed,
        householder: s,
        embedding_householder,
        kappa,
        sign_flipped,
        scale: sigma_max,
        original_matrix: a_pad,
        original_rhs: b_pad,
        original_dim: n,
    })
}

/// Writes `A`, `b` and the conductivities as a coordinate-format text file.
pub fn write_problem<W: Write>(
    mut w: W,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lambdas: Option<&[f64]>,
) -> std::io::Result<()> {
    let nnz = a.iter().filter(|v| **v != 0.0).count();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), nnz)?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != 0.0 {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
    }
    writeln!(w, "%%rhs {}", b.len())?;
    for v in b.iter() {
        writeln!(w, "{v:.17e}")?;
    }
    if let Some(l) = lambdas {
        writeln!(w, "%%conductivity {}", l.len())?;
        for v in l {
            writeln!(w, "{v:.17e}")?;
        }
    }
    Ok(())
}
