//! Serializable per-run records.

use serde::{Deserialize, Serialize};

use crate::controller::{ScheduleMode, StepKind};
use crate::metrics::SolutionReport;
use crate::optimize::{MinimizeOptions, Termination};

/// Bumped whenever the JSON layout of [`RunTrace`] changes.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub s_from: f64,
    pub s_to: f64,
    pub kind: StepKind,
    pub delta_s: f64,
    /// Smallest eigenvalue of the cost Hessian at the start of the step.
    pub lambda_min: Option<f64>,
    /// Smallest extrapolated Hessian eigenvalue at `ds = 1 - s`.
    pub lambda_min_at_end: Option<f64>,
    pub optimizer_iterations: usize,
    pub optimizer_evaluations: usize,
    pub termination: Termination,
    pub cost: f64,
    pub grad_norm: f64,
    /// Euclidean distance between the warm start and the new minimum.
    pub theta_jump: f64,
    /// Circuit (statevector) evaluations spent in this step.
    pub circuit_evaluations: usize,
    pub eigen_solves: usize,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "index,s_from,s_to,kind,delta_s,lambda_min,lambda_min_at_end,iterations,evaluations,termination,cost,grad_norm,theta_jump,circuit_evaluations";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{},{:?},{:e},{},{},{},{},{:?},{:e},{:e},{:e},{}",
            self.index,
            self.s_from,
            self.s_to,
            self.kind,
            self.delta_s,
            opt(self.lambda_min),
            opt(self.lambda_min_at_end),
            self.optimizer_iterations,
            self.optimizer_evaluations,
            self.termination,
            self.cost,
            self.grad_norm,
            self.theta_jump,
            self.circuit_evaluations,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub schema_version: u32,
    pub mode: ScheduleMode,
    /// Step budget `T` of the fallback schedule.
    pub steps_budget: usize,
    pub n_qubits: usize,
    pub depth: usize,
    pub n_params: usize,
    pub kappa: f64,
    pub embedded: bool,
    pub eps_psd: f64,
    pub optimizer: MinimizeOptions,
    pub steps: Vec<StepRecord>,
    /// Number of adiabatic increments actually executed.
    pub effective_steps: usize,
    pub theta_final: Vec<f64>,
    pub cost_final: f64,
    pub circuit_evaluations: usize,
    pub eigen_solves: usize,
    pub warnings: Vec<String>,
    pub report: Option<SolutionReport>,
}

impl RunTrace {
    pub fn step_fraction(&self) -> f64 {
        self.effective_steps as f64 / self.steps_budget as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
