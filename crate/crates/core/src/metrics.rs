//! Dense classical reference solutions and solution-quality metrics.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const PIVOT_TOL: f64 = 1e-14;
const NORM_TOL: f64 = 1e-8;

/// Normalized `A^{-1} b`.
pub fn classical_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = linalg::ensure_square(a)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: b.len() });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let diag = u.diagonal();
    let (umax, umin) = diag.iter().fold((0.0f64, f64::INFINITY), |(mx, mn), v| (mx.max(v.abs()), mn.min(v.abs())));
    if !(umax > 0.0) || umin < PIVOT_TOL * umax {
        return Err(Error::Singular(format!("pivot ratio {:e}", umin / umax)));
    }
    let x = lu.solve(b).ok_or_else(|| Error::Singular("LU solve failed".into()))?;
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(x / norm)
}

/// Normalized solution of `((1 - s) I + s A) x ~ b`.
pub fn solve_parametric(a: &DMatrix<f64>, b: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
    let n = linalg::ensure_square(a)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(format!("s = {s}")));
    }
    let pencil = DMatrix::identity(n, n) * (1.0 - s) + a * s;
    classical_solve(&pencil, b)
}

fn check_unit(x: &DVector<f64>) -> Result<()> {
    let norm = x.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

/// `1 - |<x_exact|x_var>|^2`.
pub fn infidelity(x_var: &DVector<f64>, x_exact: &DVector<f64>) -> Result<f64> {
    if x_var.len() != x_exact.len() {
        return Err(Error::DimensionMismatch { expected: x_exact.len(), actual: x_var.len() });
    }
    check_unit(x_var)?;
    check_unit(x_exact)?;
    let overlap = x_var.dot(x_exact);
    Ok((1.0 - overlap * overlap).clamp(0.0, 1.0))
}

/// `|<b|A|x>|^2 / |A x|^2`, with `b` unit.
pub fn accuracy(a: &DMatrix<f64>, b: &DVector<f64>, x_var: &DVector<f64>) -> Result<f64> {
    check_unit(b)?;
    let ax = a * x_var;
    let norm2 = ax.norm_squared();
    if norm2 < 1e-300 {
        return Err(Error::ZeroVector);
    }
    let num = b.dot(&ax);
    Ok((num * num / norm2).clamp(0.0, 1.0))
}

/// An eigenpair of `A` and the weight of `x` on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOverlap {
    pub eigenvalue: f64,
    pub weight: f64,
}

/// `|<a_k|x>|^2` over unit right eigenvectors, sorted by ascending eigenvalue.
///
/// For non-normal `A` the eigenvectors are not orthogonal and the weights
/// need not sum to one.
pub fn eigen_overlaps(a: &DMatrix<f64>, x: &DVector<f64>) -> Result<Vec<EigenOverlap>> {
    let n = linalg::ensure_square(a)?;
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(f64, DVector<f64>)> = if linalg::asymmetry(a) <= 1e-12 * scale {
        let eig = SymmetricEigen::new(a.clone());
        (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())).collect()
    } else {
        right_eigenpairs(a, scale)?
    };
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs
        .into_iter()
        .map(|(eigenvalue, v)| {
            let o = v.dot(x);
            EigenOverlap { eigenvalue, weight: o * o }
        })
        .collect())
}

/// Right eigenvectors of a matrix with real spectrum, by shifted inverse iteration.
fn right_eigenpairs(a: &DMatrix<f64>, scale: f64) -> Result<Vec<(f64, DVector<f64>)>> {
    let n = a.nrows();
    let values = linalg::eigenvalues(a)?;
    if let Some(z) = values.iter().find(|z| z.im.abs() > 1e-9 * scale) {
        return Err(Error::Eigen(format!("complex eigenvalue {z} in overlap analysis")));
    }
    let mut out = Vec::with_capacity(n);
    for z in values {
        let mu = z.re + 1e-10 * scale;
        let shifted = a - DMatrix::identity(n, n) * mu;
        let lu = shifted.lu();
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7 + 3) % 11) as f64);
        v /= v.norm();
        for _ in 0..4 {
            let w = lu.solve(&v).ok_or_else(|| Error::Eigen("inverse iteration hit a singular shift".into()))?;
            let norm = w.norm();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::Eigen("inverse iteration diverged".into()));
            }
            v = w / norm;
        }
        out.push((z.re, v));
    }
    Ok(out)
}

/// Quality summary of a variational solution, in the original basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub x_variational: Vec<f64>,
    pub x_exact: Vec<f64>,
    pub infidelity: f64,
    pub accuracy: f64,
    pub cost_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<Vec<EigenOverlap>>,
}

impl SolutionReport {
    /// Scores `x_var` against the system `(a, b)`.
    pub fn evaluate(
        a: &DMatrix<f64>,
        b: &DVector<f64>,
        x_var: &DVector<f64>,
        cost_final: f64,
        with_overlaps: bool,
    ) -> Result<Self> {
        let x_exact = classical_solve(a, b)?;
        // Fix the global sign for readability; metrics are sign-blind.
        let x_var = if x_var.dot(&x_exact) < 0.0 { -x_var } else { x_var.clone() };
        let b_unit = b / b.norm();
        let overlaps = if with_overlaps { Some(eigen_overlaps(a, &x_exact)?) } else { None };
        Ok(Self {
            infidelity: infidelity(&x_var, &x_exact)?,
            accuracy: accuracy(a, &b_unit, &x_var)?,
            x_variational: x_var.iter().copied().collect(),
            x_exact: x_exact.iter().copied().collect(),
            cost_final,
            overlaps,
        })
    }
}
