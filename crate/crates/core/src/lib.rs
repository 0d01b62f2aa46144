//! Variational-adiabatic linear-system solver with Hessian-guided warm starts.
//!
//! A linear system `A x = b` is rewritten so that `b = e_1` and the
//! homotopy `A(s) = (1 - s) I + s A` starts from the identity. The ground
//! state of `H(s) = A(s)^T (I - |e_1><e_1|) A(s)` is the normalized solution
//! of `A(s) x ~ e_1`; a layered R_y/CNOT ansatz, emulated as a real
//! statevector, follows that ground state from `s = 0` (all angles zero) to
//! `s = 1`, warm-starting each minimization at the previous minimum.
//!
//! Module map:
//! - [`ansatz`]: statevector kernels and the circuit layout.
//! - [`cost`]: expansion of `H(s)` in `s`, parameter-shift derivatives.
//! - [`schedule`]: the condition-number-aware `s(v)` sequence.
//! - [`controller`]: convexity analysis, step decisions and the outer loop.
//! - [`optimize`]: L-BFGS minimizer.
//! - [`problems`]: heat-flow test systems and system preparation.
//! - [`metrics`]: dense reference solutions and quality metrics.

pub mod ansatz;
pub mod controller;
pub mod cost;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod optimize;
pub mod problems;
pub mod schedule;
pub mod trace;
pub mod verify;

pub use ansatz::{apply_ansatz, expectation, AnsatzConfig, Entangler, ParameterVector, StateVector};
pub use controller::{propose_step, solve_adiabatic, ControllerOptions, RootOptions, ScheduleMode, StepDecision, StepKind};
pub use cost::{
    build_cost_model, component_hessians, cost, cost_extrapolate, cost_gradient, cost_hessian, hessian_extrapolate,
    CostModel, Evaluator, HessianBundle, Moments,
};
pub use error::{Error, Result};
pub use metrics::{accuracy, classical_solve, eigen_overlaps, infidelity, solve_parametric, SolutionReport};
pub use optimize::{minimize, MinimizeOptions, MinimizeResult, Termination};
pub use problems::{
    build_source, discretize_heat, heat_system, householder, prepare, ConductivityKind, ConductivityProfile, PrepareOptions,
    PreparedSystem, SourceKind, SourceSpec, write_problem,
};
pub use schedule::{condition_number, s_of_v, v_bounds, Schedule};
pub use trace::{RunTrace, StepRecord};
