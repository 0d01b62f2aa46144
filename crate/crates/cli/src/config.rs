//! Run configuration file (TOML).

use std::path::{Path, PathBuf};

use avqls_core::{
    AnsatzConfig, ConductivityProfile, ControllerOptions, Entangler, MinimizeOptions, RootOptions, ScheduleMode,
    SourceSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conductivity {
    Constant,
    NoisyConstant,
    Linear,
    NoisyLinear,
}

impl Conductivity {
    pub fn is_noisy(self) -> bool {
        matches!(self, Self::NoisyConstant | Self::NoisyLinear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Point,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub conductivity: Conductivity,
    pub lambda0: f64,
    /// Gradient of the linear profile `lambda(z) = slope * z`.
    pub slope: f64,
    /// Noise level; when absent, 0.2 for constant and 0.05 for linear profiles.
    pub sigma: Option<f64>,
    pub source: Source,
    pub l: f64,
    pub q0: f64,
    pub boundary: Boundary,
    /// Noise seed entry, mixed with the master seed and `n`.
    pub seed: u64,
    /// Replace the heat matrix by the identity (debug problem).
    pub debug_identity: bool,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            conductivity: Conductivity::Constant,
            lambda0: 1.0,
            slope: 2.0,
            sigma: None,
            source: Source::Point,
            l: 0.0,
            q0: 1.0,
            boundary: Boundary::Open,
            seed: 0,
            debug_identity: false,
        }
    }
}

impl ProblemConfig {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(match self.conductivity {
            Conductivity::Linear | Conductivity::NoisyLinear => 0.05,
            _ => 0.2,
        })
    }

    pub fn profile(&self, noise_seed: u64) -> ConductivityProfile {
        match self.conductivity {
            Conductivity::Constant => ConductivityProfile::constant(self.lambda0),
            Conductivity::NoisyConstant => ConductivityProfile::noisy_constant(self.lambda0, self.sigma(), noise_seed),
            Conductivity::Linear => ConductivityProfile::linear(self.slope),
            Conductivity::NoisyLinear => ConductivityProfile::noisy_linear(self.slope, self.sigma(), noise_seed),
        }
    }

    pub fn source_spec(&self) -> SourceSpec {
        let base = match self.source {
            Source::Point => SourceSpec::point(),
            Source::Exponential => SourceSpec::exponential(self.l),
        };
        SourceSpec { q0: self.q0, ..base }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "T", alias = "steps")]
    pub steps: usize,
    pub mode: ScheduleMode,
    pub eps_psd: f64,
    pub gtol: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub shift: f64,
    pub entangler: Entangler,
    pub overlaps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let c = ControllerOptions::default();
        Self {
            n: 4,
            d: 2,
            steps: 50,
            mode: c.mode,
            eps_psd: c.eps_psd,
            gtol: c.optimizer.gtol,
            max_iter: c.optimizer.max_iter,
            memory: c.optimizer.memory,
            shift: c.shift,
            entangler: Entangler::default(),
            overlaps: false,
        }
    }
}

impl SolverConfig {
    pub fn controller(&self, mode: ScheduleMode) -> ControllerOptions {
        ControllerOptions {
            mode,
            eps_psd: self.eps_psd,
            optimizer: MinimizeOptions {
                gtol: self.gtol,
                max_iter: self.max_iter,
                memory: self.memory,
                ..MinimizeOptions::default()
            },
            shift: self.shift,
            root: RootOptions::default(),
            overlaps: self.overlaps,
        }
    }

    pub fn ansatz(&self, n_qubits: usize, d: usize) -> AnsatzConfig {
        AnsatzConfig::new(n_qubits, d).with_entangler(self.entangler)
    }
}

/// Lists swept as a cartesian product; an absent list means "the solver value".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n: Option<Vec<usize>>,
    pub d: Option<Vec<usize>>,
    #[serde(rename = "T", alias = "steps")]
    pub steps: Option<Vec<usize>>,
    pub l: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub modes: Option<Vec<ScheduleMode>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    /// Also write the generated `(A, b, lambda)` as a text matrix file.
    pub dump_problem: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json], dump_problem: false }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed for all derived noise seeds.
    pub seed: u64,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

pub const MAX_QUBITS: usize = 14;

fn check(ok: bool, path: &str, msg: impl std::fmt::Display) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{path}: {msg}")))
    }
}

fn check_list<T>(list: &Option<Vec<T>>, path: &str, each: impl Fn(&T) -> bool, msg: &str) -> Result<(), CliError> {
    if let Some(items) = list {
        check(!items.is_empty(), path, "list must not be empty")?;
        for (i, x) in items.iter().enumerate() {
            check(each(x), &format!("{path}[{i}]"), msg)?;
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        check(p.lambda0.is_finite() && p.lambda0 > 0.0, "problem.lambda0", "must be positive")?;
        check(p.slope.is_finite() && p.slope > 0.0, "problem.slope", "must be positive")?;
        check(p.sigma().is_finite() && p.sigma() >= 0.0, "problem.sigma", "must be non-negative")?;
        check(p.l.is_finite() && p.l >= 0.0, "problem.l", "must be non-negative")?;
        check(p.q0.is_finite() && p.q0 != 0.0, "problem.q0", "must be non-zero")?;

        let s = &self.solver;
        let qubits = |n: &usize| (1..=MAX_QUBITS).contains(n);
        check(qubits(&s.n), "solver.n", format!("must be in 1..={MAX_QUBITS}"))?;
        check(s.d <= 32, "solver.d", "must be at most 32")?;
        check(s.steps >= 1, "solver.T", "must be at least 1")?;
        check(s.eps_psd.is_finite() && s.eps_psd >= 0.0, "solver.eps_psd", "must be non-negative")?;
        check(s.gtol.is_finite() && s.gtol > 0.0, "solver.gtol", "must be positive")?;
        check(s.max_iter >= 1, "solver.max_iter", "must be at least 1")?;
        check(s.memory >= 1, "solver.memory", "must be at least 1")?;
        check(s.shift > 0.0 && s.shift < std::f64::consts::PI, "solver.shift", "must lie in (0, pi)")?;

        let w = &self.sweep;
        check_list(&w.n, "sweep.n", qubits, &format!("must be in 1..={MAX_QUBITS}"))?;
        check_list(&w.d, "sweep.d", |d| *d <= 32, "must be at most 32")?;
        check_list(&w.steps, "sweep.T", |t| *t >= 1, "must be at least 1")?;
        check_list(&w.l, "sweep.l", |l| l.is_finite() && *l >= 0.0, "must be non-negative")?;
        check_list(&w.sigma, "sweep.sigma", |x| x.is_finite() && *x >= 0.0, "must be non-negative")?;
        check_list(&w.modes, "sweep.modes", |_| true, "")?;
        check_list(&w.seeds, "sweep.seeds", |_| true, "")?;
        if w.l.is_some() {
            check(p.source == Source::Exponential, "sweep.l", "requires problem.source = \"exponential\"")?;
        }
        if w.sigma.is_some() {
            check(p.conductivity.is_noisy(), "sweep.sigma", "requires a noisy conductivity")?;
        }
        check(!self.output.formats.is_empty(), "output.formats", "list must not be empty")?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
