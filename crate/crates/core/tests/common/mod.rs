//! Dense reference implementations shared by the integration tests.
//!
//! Everything here is built from explicit Kronecker products and direct
//! matrix algebra, independent of the in-place statevector kernels and the
//! moment expansion used by the library.

#![allow(dead_code)]

use avqls_core::{prepare, AnsatzConfig, PrepareOptions, PreparedSystem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn kron_all(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

fn ry2(angle: f64) -> DMatrix<f64> {
    let (s, c) = (0.5 * angle).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `R_y` on qubit `q` of `n`, qubit 0 being the leftmost tensor factor.
pub fn dense_ry(n: usize, q: usize, angle: f64) -> DMatrix<f64> {
    let factors: Vec<_> = (0..n).map(|k| if k == q { ry2(angle) } else { DMatrix::identity(2, 2) }).collect();
    kron_all(&factors)
}

/// CNOT as `|0><0|_c (x) I + |1><1|_c (x) X_t`.
pub fn dense_cnot(n: usize, control: usize, target: usize) -> DMatrix<f64> {
    let p0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let p1 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let id = DMatrix::identity(2, 2);
    let pick = |k: usize, on_control: &DMatrix<f64>, on_target: &DMatrix<f64>| -> DMatrix<f64> {
        if k == control {
            on_control.clone()
        } else if k == target {
            on_target.clone()
        } else {
            id.clone()
        }
    };
    let first: Vec<_> = (0..n).map(|k| pick(k, &p0, &id)).collect();
    let second: Vec<_> = (0..n).map(|k| pick(k, &p1, &x)).collect();
    kron_all(&first) + kron_all(&second)
}

pub fn dense_unitary(cfg: &AnsatzConfig, theta: &[f64]) -> DMatrix<f64> {
    let n = cfg.n_qubits;
    let mut u = DMatrix::identity(1 << n, 1 << n);
    for q in 0..n {
        u = dense_ry(n, q, theta[q]) * u;
    }
    for layer in 0..cfg.depth {
        for (c, t) in cfg.entangler_pairs() {
            u = dense_cnot(n, c, t) * u;
        }
        for q in 0..n {
            u = dense_ry(n, q, theta[n * (layer + 1) + q]) * u;
        }
    }
    u
}

pub fn dense_state(cfg: &AnsatzConfig, theta: &[f64]) -> DVector<f64> {
    dense_unitary(cfg, theta).column(0).into_owned()
}

/// `A(s)^T (I - e_1 e_1^T) A(s)` with `A(s) = (1 - s) I + s M`.
pub fn dense_hamiltonian(m: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let a = DMatrix::identity(n, n) * (1.0 - s) + m * s;
    let mut q = DMatrix::identity(n, n);
    q[(0, 0)] = 0.0;
    a.transpose() * q * a
}

pub fn oracle_cost(m: &DMatrix<f64>, cfg: &AnsatzConfig, theta: &[f64], s: f64) -> f64 {
    let x = dense_state(cfg, theta);
    (x.transpose() * dense_hamiltonian(m, s) * &x)[(0, 0)]
}

pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> DVector<f64> {
    let mut t = theta.to_vec();
    DVector::from_fn(theta.len(), |i, _| {
        t[i] = theta[i] + h;
        let up = f(&t);
        t[i] = theta[i] - h;
        let down = f(&t);
        t[i] = theta[i];
        (up - down) / (2.0 * h)
    })
}

pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> DMatrix<f64> {
    let p = theta.len();
    let mut t = theta.to_vec();
    let mut eval = |di: (usize, f64), dj: (usize, f64)| {
        t.copy_from_slice(theta);
        t[di.0] += di.1;
        t[dj.0] += dj.1;
        f(&t)
    };
    let mut out = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = (eval((i, h), (j, h)) - eval((i, h), (j, -h)) - eval((i, -h), (j, h)) + eval((i, -h), (j, -h)))
                / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Random well-conditioned positive system of dimension `2^n`.
pub fn random_positive_system(rng: &mut impl Rng, n_qubits: usize) -> (DMatrix<f64>, DVector<f64>) {
    let dim = 1 << n_qubits;
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let a = g.transpose() * &g / dim as f64 + DMatrix::identity(dim, dim) * 0.5;
    let b = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    (a, b)
}

pub fn random_prepared(rng: &mut impl Rng, n_qubits: usize) -> PreparedSystem {
    let (a, b) = random_positive_system(rng, n_qubits);
    prepare(&a, &b, &PrepareOptions::default()).expect("random SPD system prepares")
}

pub fn random_theta(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}
