//! The adiabatic Hamiltonian `H(s) = A(s)^T (I - P) A(s)` with
//! `A(s) = I + s D`, `D = M - I`, `P = e_1 e_1^T`, and its exact quadratic
//! expansion `H(s) = s^2 a + s b + c`.
//!
//! Every circuit quantity is evaluated through the three moments
//! `(<a>, <b>, <c>)` of a state. One pass over the parameter-shift stencil
//! therefore yields the Hessian of the cost and the Hessians of `<a>` and
//! `<b>` that drive the step extrapolation.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ansatz::{apply_ansatz_into, AnsatzConfig, ParameterVector};
use crate::error::{Error, Result};
use crate::linalg::{self, basis_vector};
use crate::problems::PreparedSystem;

/// Default parameter-shift angle.
pub const DEFAULT_SHIFT: f64 = FRAC_PI_2;

/// Below this many `dim * n_params` work units the Hessian stencil runs serially.
const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Debug, Clone)]
pub struct CostModel {
    pub a_op: DMatrix<f64>,
    pub b_op: DMatrix<f64>,
    pub c_op: DMatrix<f64>,
    /// `D = M - I`.
    pub shift: DMatrix<f64>,
    /// Current adiabatic parameter.
    pub s: f64,
}

impl CostModel {
    /// Expansion operators for the working matrix `m` with right-hand side `e_1`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let n = linalg::ensure_square(m)?;
        let d = m - DMatrix::identity(n, n);
        // (I - P) D zeroes the first row of D.
        let mut proj_d = d.clone();
        proj_d.row_mut(0).fill(0.0);
        let a_op = d.transpose() * &proj_d;
        let b_op = proj_d.transpose() + &proj_d;
        let mut c_op = DMatrix::identity(n, n);
        c_op[(0, 0)] = 0.0;
        Ok(Self { a_op, b_op, c_op, shift: d, s: 0.0 })
    }

    /// Same as [`CostModel::from_matrix`] but checks that `rhs` is `e_1`.
    pub fn from_system(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<Self> {
        let n = linalg::ensure_square(m)?;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: rhs.len() });
        }
        if (rhs - basis_vector(n, 0)).norm() > 1e-12 {
            return Err(Error::RhsNotBasisVector);
        }
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.shift.nrows()
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// Dense `s^2 a + s b + c`.
    pub fn hamiltonian(&self, s: f64) -> DMatrix<f64> {
        &self.a_op * (s * s) + &self.b_op * s + &self.c_op
    }

    /// `(<a>, <b>, <c>)` on `x`, with one `D x` product.
    pub fn moments(&self, x: &DVector<f64>) -> Moments {
        let w = &self.shift * x;
        moments_from(x.as_slice(), w.as_slice())
    }
}

/// Builds the expansion for a prepared system.
pub fn build_cost_model(system: &PreparedSystem) -> Result<CostModel> {
    CostModel::from_system(&system.matrix, &system.rhs())
}

fn moments_from(x: &[f64], w: &[f64]) -> Moments {
    let (x0, w0) = (x[0], w[0]);
    let ww: f64 = w.iter().map(|v| v * v).sum();
    let xw: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    let xx: f64 = x.iter().map(|v| v * v).sum();
    Moments { a: ww - w0 * w0, b: 2.0 * (xw - x0 * w0), c: xx - x0 * x0 }
}

/// Expectation values of the expansion operators on one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Moments {
    /// `C_s = s^2 <a> + s <b> + <c>`.
    pub fn cost(&self, s: f64) -> f64 {
        s * s * self.a + s * self.b + self.c
    }

    /// `C_{s+ds}` from quantities at `s`; exact for any `ds`.
    pub fn extrapolate(&self, s: f64, ds: f64) -> f64 {
        ds * ds * self.a + ds * (2.0 * s * self.a + self.b) + self.cost(s)
    }

    fn combine(terms: &[(f64, Moments)]) -> Moments {
        let mut out = Moments::default();
        for &(w, m) in terms {
            out.a += w * m.a;
            out.b += w * m.b;
            out.c += w * m.c;
        }
        out
    }
}

/// Gradient and Hessians at one parameter point.
#[derive(Debug, Clone)]
pub struct HessianBundle {
    /// Adiabatic parameter the bundle was evaluated at.
    pub s: f64,
    /// Hessian of `C_s`.
    pub h_s: DMatrix<f64>,
    /// Hessian of `<a>`.
    pub k: DMatrix<f64>,
    /// Hessian of `<b>`.
    pub b: DMatrix<f64>,
    /// Hessian of `<c>`.
    pub c: DMatrix<f64>,
    pub grad: DVector<f64>,
    pub moments: Moments,
    /// Circuit evaluations spent.
    pub evaluations: usize,
}

impl HessianBundle {
    /// Hessian of `C_{s+ds}`; exact for any `ds`.
    pub fn extrapolate(&self, ds: f64) -> DMatrix<f64> {
        &self.k * (ds * ds) + (&self.k * (2.0 * self.s) + &self.b) * ds + &self.h_s
    }
}

/// `ds^2 K + ds (2 s K + B) + H_s`, for a bundle computed at `s`.
pub fn hessian_extrapolate(bundle: &HessianBundle, s: f64, ds: f64) -> DMatrix<f64> {
    &bundle.k * (ds * ds) + (&bundle.k * (2.0 * s) + &bundle.b) * ds + &bundle.h_s
}

fn check_s(s: f64) -> Result<()> {
    if !(-1e-12..=1.0 + 1e-12).contains(&s) {
        return Err(Error::OutOfRange(format!("adiabatic parameter s = {s} outside [0, 1]")));
    }
    Ok(())
}

/// Circuit-level evaluator binding a cost model, an ansatz and a shift angle.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub model: &'a CostModel,
    pub config: &'a AnsatzConfig,
    pub beta: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a CostModel, config: &'a AnsatzConfig) -> Result<Self> {
        if model.dim() != config.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), actual: config.dim() });
        }
        Ok(Self { model, config, beta: DEFAULT_SHIFT })
    }

    pub fn with_shift(mut self, beta: f64) -> Self {
        assert!(beta.sin().abs() > 1e-3, "shift angle {beta} has vanishing sine");
        self.beta = beta;
        self
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.config.n_params() {
            return Err(Error::DimensionMismatch { expected: self.config.n_params(), actual: theta.len() });
        }
        Ok(())
    }

    /// Moments of `U(theta)|0>`.
    pub fn moments(&self, theta: &[f64]) -> Moments {
        let dim = self.config.dim();
        let mut x = vec![0.0; dim];
        apply_ansatz_into(self.config, theta, &mut x);
        let mut w = vec![0.0; dim];
        // w = D x, row-major over a column-major matrix.
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.model.shift.column(j);
            for (wi, dij) in w.iter_mut().zip(col.iter()) {
                *wi += dij * xj;
            }
        }
        moments_from(&x, &w)
    }

    fn shifted(&self, theta: &[f64], shifts: &[(usize, f64)]) -> Moments {
        let mut t = theta.to_vec();
        for &(i, delta) in shifts {
            t[i] += delta;
        }
        self.moments(&t)
    }

    pub fn cost(&self, theta: &[f64], s: f64) -> Result<f64> {
        self.check(theta)?;
        check_s(s)?;
        Ok(self.moments(theta).cost(s))
    }

    /// Parameter-shift gradient of `C_s`.
    pub fn gradient(&self, theta: &[f64], s: f64) -> Result<DVector<f64>> {
        self.check(theta)?;
        check_s(s)?;
        Ok(self.gradient_unchecked(theta, s))
    }

    pub(crate) fn gradient_unchecked(&self, theta: &[f64], s: f64) -> DVector<f64> {
        let denom = 2.0 * self.beta.sin();
        DVector::from_fn(theta.len(), |i, _| {
            let plus = self.shifted(theta, &[(i, self.beta)]).cost(s);
            let minus = self.shifted(theta, &[(i, -self.beta)]).cost(s);
            (plus - minus) / denom
        })
    }

    /// Gradient and all three Hessians at `(theta, s)`.
    pub fn bundle(&self, theta: &[f64], s: f64) -> Result<HessianBundle> {
        self.check(theta)?;
        check_s(s)?;
        let np = theta.len();
        let beta = self.beta;
        let scale = 1.0 / (4.0 * beta.sin().powi(2));
        let center = self.moments(theta);

        let pairs: Vec<(usize, usize)> = (0..np).flat_map(|i| (i..np).map(move |j| (i, j))).collect();
        let entry = |&(i, j): &(usize, usize)| -> Moments {
            if i == j {
                let p = self.shifted(theta, &[(i, 2.0 * beta)]);
                let m = self.shifted(theta, &[(i, -2.0 * beta)]);
                Moments::combine(&[(scale, p), (-2.0 * scale, center), (scale, m)])
            } else {
                let pp = self.shifted(theta, &[(i, beta), (j, beta)]);
                let pm = self.shifted(theta, &[(i, beta), (j, -beta)]);
                let mp = self.shifted(theta, &[(i, -beta), (j, beta)]);
                let mm = self.shifted(theta, &[(i, -beta), (j, -beta)]);
                Moments::combine(&[(scale, pp), (-scale, pm), (-scale, mp), (scale, mm)])
            }
        };
        let entries: Vec<Moments> = if self.config.dim() * np >= PARALLEL_THRESHOLD {
            pairs.par_iter().map(entry).collect()
        } else {
            pairs.iter().map(entry).collect()
        };

        let mut k = DMatrix::zeros(np, np);
        let mut b = DMatrix::zeros(np, np);
        let mut c = DMatrix::zeros(np, np);
        for (&(i, j), m) in pairs.iter().zip(&entries) {
            for (mat, v) in [(&mut k, m.a), (&mut b, m.b), (&mut c, m.c)] {
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        let h_s = &k * (s * s) + &b * s + &c;
        let grad = self.gradient_unchecked(theta, s);
        let evaluations = 1 + 2 * np + 4 * (np * (np.saturating_sub(1)) / 2) + 2 * np;
        Ok(HessianBundle { s, h_s, k, b, c, grad, moments: center, evaluations })
    }
}

/// `<U(theta)0| H(s) |U(theta)0>`.
pub fn cost(model: &CostModel, config: &AnsatzConfig, theta: &ParameterVector, s: f64) -> Result<f64> {
    Evaluator::new(model, config)?.cost(theta.as_slice(), s)
}

/// `C_{s+ds}(theta)` from the moments at `theta`.
pub fn cost_extrapolate(model: &CostModel, config: &AnsatzConfig, theta: &ParameterVector, s: f64, ds: f64) -> Result<f64> {
    let ev = Evaluator::new(model, config)?;
    ev.check(theta.as_slice())?;
    check_s(s)?;
    check_s(s + ds)?;
    Ok(ev.moments(theta.as_slice()).extrapolate(s, ds))
}

pub fn cost_gradient(model: &CostModel, config: &AnsatzConfig, theta: &ParameterVector, s: f64) -> Result<DVector<f64>> {
    Evaluator::new(model, config)?.gradient(theta.as_slice(), s)
}

pub fn cost_hessian(model: &CostModel, config: &AnsatzConfig, theta: &ParameterVector, s: f64) -> Result<DMatrix<f64>> {
    Ok(Evaluator::new(model, config)?.bundle(theta.as_slice(), s)?.h_s)
}

/// Hessians of `<a>` and `<b>`.
pub fn component_hessians(model: &CostModel, config: &AnsatzConfig, theta: &ParameterVector) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let b = Evaluator::new(model, config)?.bundle(theta.as_slice(), 0.0)?;
    Ok((b.k, b.b))
}
