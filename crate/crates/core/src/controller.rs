//! Adiabatic outer loop with Hessian-guided warm starts.
//!
//! After each converged step the cost Hessian is extrapolated in `ds`; the
//! step is the largest `ds` that keeps the extrapolated Hessian positive
//! semidefinite, bounded below by the next increment of the fallback
//! schedule.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_ansatz, AnsatzConfig, ParameterVector};
use crate::cost::{build_cost_model, Evaluator, HessianBundle, DEFAULT_SHIFT};
use crate::error::Result;
use crate::linalg::min_sym_eigenvalue;
use crate::metrics::SolutionReport;
use crate::optimize::{minimize, MinimizeOptions};
use crate::problems::PreparedSystem;
use crate::schedule::Schedule;
use crate::trace::{RunTrace, StepRecord, TRACE_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Uniform increments `1/T`.
    Fixed,
    /// The `s(v)` sequence.
    Dynamic,
    /// `s(v)` as fallback plus the convexity controller.
    #[default]
    Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    FallbackSchedule,
    JumpToOne,
    MinimumStep,
    HessianStep,
    /// Plain schedule step (fixed and dynamic modes).
    Scheduled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub kind: StepKind,
    pub delta_s: f64,
    pub lambda_min: f64,
    pub lambda_min_at_end: f64,
    pub eigen_solves: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RootOptions {
    /// Uniform probes used to bracket the first sign change.
    pub scan_points: usize,
    /// Bisection stops at this bracket width.
    pub bracket_width: f64,
    pub secant_steps: usize,
    pub max_bisections: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { scan_points: 32, bracket_width: 1e-6, secant_steps: 5, max_bisections: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerOptions {
    pub mode: ScheduleMode,
    pub eps_psd: f64,
    pub optimizer: MinimizeOptions,
    /// Parameter-shift angle.
    pub shift: f64,
    pub root: RootOptions,
    /// Attach eigen-overlap analysis to the final report.
    pub overlaps: bool,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        Self {
            mode: ScheduleMode::Hessian,
            eps_psd: 1e-8,
            optimizer: MinimizeOptions::default(),
            shift: DEFAULT_SHIFT,
            root: RootOptions::default(),
            overlaps: false,
        }
    }
}

/// Four-way step decision from the Hessian bundle at a converged point.
///
/// The jump to `s = 1` is taken only when no probe on `(0, 1 - s]` breaks
/// positive semidefiniteness, so a transient dip of the smallest eigenvalue
/// is not stepped over.
pub fn propose_step(
    bundle: &HessianBundle,
    s: f64,
    eps_psd: f64,
    delta_s_min: f64,
    root: &RootOptions,
) -> StepDecision {
    let remaining = 1.0 - s;
    let delta_s_min = delta_s_min.min(remaining);
    let mut solves = 0usize;
    let mut f = |ds: f64| {
        solves += 1;
        min_sym_eigenvalue(&bundle.extrapolate(ds)) + eps_psd
    };
    let lambda_min = f(0.0) - eps_psd;
    let lambda_min_at_end = f(remaining) - eps_psd;
    let mut decision = StepDecision {
        kind: StepKind::FallbackSchedule,
        delta_s: delta_s_min,
        lambda_min,
        lambda_min_at_end,
        eigen_solves: 0,
        warning: None,
    };
    if !(lambda_min >= -eps_psd) {
        decision.eigen_solves = solves;
        return decision;
    }

    let mut lo = (0.0, lambda_min + eps_psd);
    let mut hi = None;
    let probes = root.scan_points.max(1);
    for k in 1..=probes {
        let ds = remaining * k as f64 / probes as f64;
        let v = if k == probes { lambda_min_at_end + eps_psd } else { f(ds) };
        if !v.is_finite() {
            decision.warning = Some(format!("non-finite Hessian eigenvalue at ds = {ds}"));
            decision.eigen_solves = solves;
            return decision;
        }
        if v < 0.0 {
            hi = Some((ds, v));
            break;
        }
        lo = (ds, v);
    }
    let Some(mut hi) = hi else {
        decision.kind = StepKind::JumpToOne;
        decision.delta_s = remaining;
        decision.eigen_solves = solves;
        return decision;
    };

    let mut bisections = 0;
    while hi.0 - lo.0 > root.bracket_width {
        if bisections == root.max_bisections {
            decision.warning = Some(format!("root bracket [{}, {}] did not shrink", lo.0, hi.0));
            decision.eigen_solves = solves;
            return decision;
        }
        let mid = 0.5 * (lo.0 + hi.0);
        let v = f(mid);
        if v >= 0.0 {
            lo = (mid, v);
        } else {
            hi = (mid, v);
        }
        bisections += 1;
    }
    // False-position refinement; `lo` always keeps f >= 0.
    for _ in 0..root.secant_steps {
        let denom = lo.1 - hi.1;
        if denom <= 0.0 {
            break;
        }
        let x = lo.0 + (hi.0 - lo.0) * lo.1 / denom;
        if !(x > lo.0 && x < hi.0) {
            break;
        }
        let v = f(x);
        if v >= 0.0 {
            lo = (x, v);
        } else {
            hi = (x, v);
        }
    }

    decision.eigen_solves = solves;
    if lo.0 <= delta_s_min {
        decision.kind = StepKind::MinimumStep;
    } else {
        decision.kind = StepKind::HessianStep;
        decision.delta_s = lo.0;
    }
    decision
}

/// Tracks the ground state of `H(s)` from `s = 0` to `s = 1`.
pub fn solve_adiabatic(
    system: &PreparedSystem,
    config: &AnsatzConfig,
    steps: usize,
    opts: &ControllerOptions,
) -> Result<(ParameterVector, RunTrace)> {
    let model = build_cost_model(system)?;
    let ev = Evaluator::new(&model, config)?.with_shift(opts.shift);
    let schedule = match opts.mode {
        ScheduleMode::Fixed => Schedule::uniform(steps)?,
        ScheduleMode::Dynamic | ScheduleMode::Hessian => Schedule::default_sequence(system.kappa, steps)?,
    };
    let floor = schedule.s_grid.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let max_steps = steps + (1.0 / floor).ceil() as usize;

    let mut theta = config.zero_params().0;
    let mut s = 0.0;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut total_evals = 0usize;
    let mut total_solves = 0usize;

    while s < 1.0 && records.len() < max_steps {
        let delta_s_min = schedule.increment_from(s);
        let mut step_evals = 0;
        let decision = match opts.mode {
            ScheduleMode::Hessian => {
                let bundle = ev.bundle(&theta, s)?;
                step_evals += bundle.evaluations;
                let d = propose_step(&bundle, s, opts.eps_psd, delta_s_min, &opts.root);
                if let Some(w) = &d.warning {
                    warnings.push(format!("step {} at s = {s}: {w}", records.len()));
                }
                Some(d)
            }
            ScheduleMode::Fixed | ScheduleMode::Dynamic => None,
        };
        let (kind, delta_s) = decision.as_ref().map_or((StepKind::Scheduled, delta_s_min), |d| (d.kind, d.delta_s));
        let s_next = if kind == StepKind::JumpToOne || s + delta_s >= 1.0 - 1e-12 { 1.0 } else { s + delta_s };

        let n_params = theta.len();
        let result = minimize(
            |t| ev.moments(t).cost(s_next),
            |t| ev.gradient_unchecked(t, s_next).as_slice().to_vec(),
            &theta,
            &opts.optimizer,
        );
        step_evals += result.evaluations * (1 + 2 * n_params);
        let jump = theta.iter().zip(&result.theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();

        let record = StepRecord {
            index: records.len(),
            s_from: s,
            s_to: s_next,
            kind,
            delta_s: s_next - s,
            lambda_min: decision.as_ref().map(|d| d.lambda_min),
            lambda_min_at_end: decision.as_ref().map(|d| d.lambda_min_at_end),
            optimizer_iterations: result.iterations,
            optimizer_evaluations: result.evaluations,
            termination: result.termination,
            cost: result.cost,
            grad_norm: result.grad_norm,
            theta_jump: jump,
            circuit_evaluations: step_evals,
            eigen_solves: decision.as_ref().map_or(0, |d| d.eigen_solves),
        };
        log::info!(target: "avqls::steps", "{}", record.csv_row());
        total_evals += step_evals;
        total_solves += record.eigen_solves;
        records.push(record);
        theta = result.theta;
        s = s_next;
    }
    if s < 1.0 {
        warnings.push(format!("step cap {max_steps} reached at s = {s}"));
    }

    let theta = ParameterVector(theta);
    let cost_final = ev.moments(theta.as_slice()).cost(1.0);
    let state = apply_ansatz(config, &theta)?;
    let x = system.recover(state.amplitudes())?;
    let report = SolutionReport::evaluate(&system.original_matrix, &system.original_rhs, &x, cost_final, opts.overlaps)?;

    let trace = RunTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        mode: opts.mode,
        steps_budget: steps,
        n_qubits: config.n_qubits,
        depth: config.depth,
        n_params: config.n_params(),
        kappa: system.kappa,
        embedded: system.embedded,
        eps_psd: opts.eps_psd,
        optimizer: opts.optimizer,
        effective_steps: records.len(),
        steps: records,
        theta_final: theta.0.clone(),
        cost_final,
        circuit_evaluations: total_evals,
        eigen_solves: total_solves,
        warnings,
        report: Some(report),
    };
    Ok((theta, trace))
}

/// Synthetic bundle for driving [`propose_step`] directly.
pub fn bundle_from_parts(s: f64, h_s: DMatrix<f64>, k: DMatrix<f64>, b: DMatrix<f64>) -> HessianBundle {
    let n = h_s.nrows();
    HessianBundle {
        s,
        c: &h_s - &k * (s * s) - &b * s,
        h_s,
        k,
        b,
        grad: nalgebra::DVector::zeros(n),
        moments: Default::default(),
        evaluations: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn negative_curvature_falls_back() {
        let b = bundle_from_parts(0.3, diag(&[-0.1, 1.0]), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2));
        let d = propose_step(&b, 0.3, 1e-8, 0.05, &RootOptions::default());
        assert_eq!(d.kind, StepKind::FallbackSchedule);
        assert_eq!(d.delta_s, 0.05);
    }

    #[test]
    fn flat_extrapolation_jumps_to_one() {
        let b = bundle_from_parts(0.4, DMatrix::identity(3, 3), DMatrix::zeros(3, 3), DMatrix::zeros(3, 3));
        let d = propose_step(&b, 0.4, 1e-8, 0.05, &RootOptions::default());
        assert_eq!(d.kind, StepKind::JumpToOne);
        assert!((d.delta_s - 0.6).abs() < 1e-15);
    }

    #[test]
    fn linear_pencil_root() {
        // lambda_min(ds) = 1 - 4 ds.
        let b = bundle_from_parts(0.0, DMatrix::identity(2, 2), DMatrix::zeros(2, 2), -diag(&[4.0, 1.0]));
        let d = propose_step(&b, 0.0, 1e-8, 0.01, &RootOptions::default());
        assert_eq!(d.kind, StepKind::HessianStep);
        assert!((d.delta_s - 0.25).abs() < 1e-6, "{}", d.delta_s);
        assert!(min_sym_eigenvalue(&b.extrapolate(d.delta_s)) >= -1e-8);

        let slow = propose_step(&b, 0.0, 1e-8, 0.3, &RootOptions::default());
        assert_eq!(slow.kind, StepKind::MinimumStep);
        assert_eq!(slow.delta_s, 0.3);
    }

    #[test]
    fn dip_below_zero_is_not_skipped() {
        // lambda(ds) = 1 - 10 ds + 12 ds^2: negative on (0.1162, 0.7171), positive at ds = 1.
        let b = bundle_from_parts(0.0, diag(&[1.0]), diag(&[12.0]), diag(&[-10.0]));
        let d = propose_step(&b, 0.0, 1e-8, 0.01, &RootOptions::default());
        assert_eq!(d.kind, StepKind::HessianStep);
        let want = (10.0 - 52f64.sqrt()) / 24.0;
        assert!((d.delta_s - want).abs() < 1e-6, "{} vs {want}", d.delta_s);
        assert!(d.lambda_min_at_end > 0.0);
    }
}
