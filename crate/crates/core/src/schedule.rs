//! Condition-number-aware adiabatic schedule.
//!
//! `v` runs over an evenly spaced grid in `[v_min, v_max]`; the map `s(v)`
//! bends the grid so that steps crowd towards `s = 1` as `kappa` grows.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Evaluations leaving `[0, 1]` by more than this are reported, not clamped.
const CLAMP_TOL: f64 = 1e-8;

/// `sigma_max / sigma_min`.
pub fn condition_number(m: &DMatrix<f64>) -> Result<f64> {
    linalg::ensure_square(m)?;
    let sv = linalg::singular_values(m);
    let (max, min) = (sv.max(), sv.min());
    if !(max > 0.0) || min < 1e-14 * max {
        return Err(Error::Singular(format!("sigma_min = {min:e}, sigma_max = {max:e}")));
    }
    Ok(max / min)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < 1.0 {
        return Err(Error::InvalidSchedule(format!("condition number {kappa} must be finite and >= 1")));
    }
    Ok(())
}

/// `sqrt((1 + k^2) / (2 k^2))`, the rate in the exponent of `s(v)`.
fn rate(kappa: f64) -> f64 {
    let k2 = kappa * kappa;
    ((1.0 + k2) / (2.0 * k2)).sqrt()
}

/// Endpoints of the `v` interval.
pub fn v_bounds(kappa: f64) -> Result<(f64, f64)> {
    check_kappa(kappa)?;
    let k2 = kappa * kappa;
    let root = (1.0 + k2).sqrt();
    // kappa sqrt(1+k^2) - k^2, written without cancellation.
    let low_arg = kappa / (root + kappa);
    let high_arg = root + 1.0;
    if !(low_arg > 0.0) || !(high_arg > 0.0) {
        return Err(Error::InvalidSchedule(format!("non-positive log argument at kappa = {kappa}")));
    }
    let pref = 1.0 / rate(kappa);
    Ok((pref * low_arg.ln(), pref * high_arg.ln()))
}

/// `s(v)`, clamped to `[0, 1]` against round-off.
pub fn s_of_v(v: f64, kappa: f64) -> Result<f64> {
    let (lo, hi) = v_bounds(kappa)?;
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if !(v >= lo - slack && v <= hi + slack) {
        return Err(Error::OutOfRange(format!("v = {v} outside [{lo}, {hi}]")));
    }
    let k2 = kappa * kappa;
    let r = rate(kappa);
    let s = ((v * r).exp() + 2.0 * k2 - k2 * (-v * r).exp()) / (2.0 * (1.0 + k2));
    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&s) {
        return Err(Error::InvalidSchedule(format!("s(v) = {s} leaves [0, 1]")));
    }
    Ok(s.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kappa: f64,
    pub steps: usize,
    pub v_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
}

impl Schedule {
    /// The nonlinear `s(v)` sequence with `steps + 1` points.
    pub fn default_sequence(kappa: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidSchedule("at least one step is required".into()));
        }
        let (lo, hi) = v_bounds(kappa)?;
        let v_grid: Vec<f64> = (0..=steps)
            .map(|j| if j == steps { hi } else { lo + (j as f64 / steps as f64) * (hi - lo) })
            .collect();
        let mut s_grid = v_grid.iter().map(|&v| s_of_v(v, kappa)).collect::<Result<Vec<_>>>()?;
        // The closed form only hits the endpoints up to rounding.
        s_grid[0] = 0.0;
        s_grid[steps] = 1.0;
        if let Some(w) = s_grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule(format!("s grid not increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self { kappa, steps, v_grid, s_grid })
    }

    /// Constant increments `1 / steps`.
    pub fn uniform(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidSchedule("at least one step is required".into()));
        }
        let s_grid: Vec<f64> = (0..=steps).map(|j| j as f64 / steps as f64).collect();
        Ok(Self { kappa: 1.0, steps, v_grid: s_grid.clone(), s_grid })
    }

    /// Smallest grid value strictly above `s`, or 1.
    pub fn next_after(&self, s: f64) -> f64 {
        self.s_grid.iter().copied().find(|&g| g > s + 1e-12).unwrap_or(1.0)
    }

    /// Distance from `s` to the next grid point.
    pub fn increment_from(&self, s: f64) -> f64 {
        (self.next_after(s) - s).max(0.0)
    }

    /// JSON array of `s` values.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.s_grid).expect("f64 vector serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_one_bounds_are_antisymmetric() {
        let (lo, hi) = v_bounds(1.0).unwrap();
        assert!((lo - (2f64.sqrt() - 1.0).ln()).abs() < 1e-15);
        assert!((hi - (2f64.sqrt() + 1.0).ln()).abs() < 1e-15);
        assert!((lo + hi).abs() < 1e-15);
        assert!((hi - 0.881_373_587_019_543).abs() < 1e-12);
    }

    #[test]
    fn kappa_one_midpoint() {
        assert!((s_of_v(0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // (1 + sinh v) / 2
        assert!((s_of_v(0.3, 1.0).unwrap() - (1.0 + 0.3f64.sinh()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn endpoints() {
        for kappa in [1.0, 10.0, 1e2, 1e3, 1e5] {
            let (lo, hi) = v_bounds(kappa).unwrap();
            assert!(s_of_v(lo, kappa).unwrap().abs() < 1e-10, "kappa {kappa}");
            assert!((s_of_v(hi, kappa).unwrap() - 1.0).abs() < 1e-10, "kappa {kappa}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(v_bounds(0.5).is_err());
        assert!(v_bounds(f64::NAN).is_err());
        assert!(s_of_v(10.0, 1.0).is_err());
        assert!(Schedule::default_sequence(10.0, 0).is_err());
        assert!(condition_number(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn small_sequences() {
        let s = Schedule::default_sequence(1.0, 2).unwrap();
        assert_eq!(s.s_grid.len(), 3);
        assert!(s.s_grid[0].abs() < 1e-15 && (s.s_grid[1] - 0.5).abs() < 1e-15 && (s.s_grid[2] - 1.0).abs() < 1e-15);
        let t1 = Schedule::default_sequence(123.0, 1).unwrap();
        assert!(t1.s_grid[0].abs() < 1e-10 && (t1.s_grid[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn high_kappa_concentrates_near_one() {
        let s = Schedule::default_sequence(1e3, 100).unwrap();
        let above = s.s_grid.iter().filter(|&&x| x > 0.9).count();
        assert!(above * 2 > s.s_grid.len(), "only {above} of {} above 0.9", s.s_grid.len());
    }

    #[test]
    fn next_increment() {
        let s = Schedule::uniform(4).unwrap();
        assert!((s.increment_from(0.0) - 0.25).abs() < 1e-15);
        assert!((s.increment_from(0.3) - 0.2).abs() < 1e-15);
        assert!((s.increment_from(0.75) - 0.25).abs() < 1e-15);
        assert_eq!(s.increment_from(1.0), 0.0);
    }

    #[test]
    fn identity_condition_number() {
        assert!((condition_number(&DMatrix::identity(5, 5)).unwrap() - 1.0).abs() < 1e-14);
    }
}
