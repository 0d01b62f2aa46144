//! Real-amplitude statevector simulation of the layered R_y / CNOT-ring ansatz.
//!
//! Qubit `q` is mapped to bit `n - 1 - q` of the basis index, so `q_0` is the
//! most significant bit and `|0...0>` is always index 0.
//!
//! The circuit is an initial column of R_y rotations followed by `depth`
//! layers; each layer applies the CNOT ring and then another R_y column.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layout of the entangling ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Entangler {
    /// CNOT with control `q_i` and target `q_{(i+1) mod n}`, for `i = 0..n-1`.
    /// For two qubits the ring collapses to a single CNOT(0 -> 1).
    #[default]
    CnotRing,
    /// Same ring with control and target swapped: `q_{(i+1) mod n} -> q_i`.
    /// Not equivalent to `CnotRing` for a fixed basis, and it lands in a
    /// different adiabatic branch on the heat problems.
    CnotRingReversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub depth: usize,
    #[serde(default)]
    pub entangler: Entangler,
}

impl AnsatzConfig {
    pub fn new(n_qubits: usize, depth: usize) -> Self {
        assert!(n_qubits > 0, "ansatz needs at least one qubit");
        Self { n_qubits, depth, entangler: Entangler::CnotRing }
    }

    pub fn with_entangler(mut self, entangler: Entangler) -> Self {
        self.entangler = entangler;
        self
    }

    /// `n (d + 1)`.
    pub fn n_params(&self) -> usize {
        self.n_qubits * (self.depth + 1)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// (control, target) pairs of one entangling layer, in application order.
    pub fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        match (self.entangler, self.n_qubits) {
            (_, 1) => Vec::new(),
            (Entangler::CnotRing, 2) => vec![(0, 1)],
            (Entangler::CnotRing, n) => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            (Entangler::CnotRingReversed, 2) => vec![(1, 0)],
            (Entangler::CnotRingReversed, n) => (0..n).map(|i| ((i + 1) % n, i)).collect(),
        }
    }

    pub fn zero_params(&self) -> ParameterVector {
        ParameterVector(vec![0.0; self.n_params()])
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), actual: theta.len() });
        }
        Ok(())
    }
}

/// Rotation angles, in radians, ordered column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A real, unit-norm statevector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<f64>);

impl StateVector {
    /// `|0...0>` on `n_qubits`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut v = DVector::zeros(1 << n_qubits);
        v[0] = 1.0;
        Self(v)
    }

    pub fn amplitudes(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[inline]
fn bit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// R_y(angle) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]] on `qubit`, in place.
pub(crate) fn apply_ry(amps: &mut [f64], n_qubits: usize, qubit: usize, angle: f64) {
    let mask = bit_mask(n_qubits, qubit);
    let (s, c) = (0.5 * angle).sin_cos();
    for i0 in 0..amps.len() {
        if i0 & mask != 0 {
            continue;
        }
        let i1 = i0 | mask;
        let (a, b) = (amps[i0], amps[i1]);
        amps[i0] = c * a - s * b;
        amps[i1] = s * a + c * b;
    }
}

pub(crate) fn apply_cnot(amps: &mut [f64], n_qubits: usize, control: usize, target: usize) {
    let cmask = bit_mask(n_qubits, control);
    let tmask = bit_mask(n_qubits, target);
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            amps.swap(i, i | tmask);
        }
    }
}

/// Writes `U(theta)|0>` into `out` without allocating.
pub(crate) fn apply_ansatz_into(config: &AnsatzConfig, theta: &[f64], out: &mut [f64]) {
    let n = config.n_qubits;
    out.fill(0.0);
    out[0] = 1.0;
    for (q, &angle) in theta[..n].iter().enumerate() {
        apply_ry(out, n, q, angle);
    }
    let pairs = config.entangler_pairs();
    for block in theta[n..].chunks_exact(n) {
        for &(c, t) in &pairs {
            apply_cnot(out, n, c, t);
        }
        for (q, &angle) in block.iter().enumerate() {
            apply_ry(out, n, q, angle);
        }
    }
}

/// Prepares `U(theta)|0>`.
pub fn apply_ansatz(config: &AnsatzConfig, theta: &ParameterVector) -> Result<StateVector> {
    config.check(&theta.0)?;
    let mut amps = vec![0.0; config.dim()];
    apply_ansatz_into(config, &theta.0, &mut amps);
    Ok(StateVector(DVector::from_vec(amps)))
}

/// `x^T op x` for a real symmetric `op`.
pub fn expectation(state: &StateVector, op: &DMatrix<f64>) -> Result<f64> {
    let n = state.len();
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: op.nrows() });
    }
    let asym = (op - op.transpose()).amax();
    if asym > 1e-10 {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(state.0.dot(&(op * &state.0)))
}
