//! Single runs, sweeps and schedule emission.

use std::time::{Duration, Instant};

use avqls_core::{
    heat_system, prepare, solve_adiabatic, PrepareOptions, PreparedSystem, RunTrace, Schedule, ScheduleMode,
};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, Source};
use crate::CliError;

/// One fully specified solver run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunPoint {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub mode: ScheduleMode,
    pub l: f64,
    pub sigma: Option<f64>,
    pub seed: u64,
}

impl RunPoint {
    fn cell(&self) -> (usize, usize, usize, ScheduleMode, u64, Option<u64>) {
        (self.n, self.d, self.steps, self.mode, self.l.to_bits(), self.sigma.map(f64::to_bits))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub point: RunPoint,
    pub noise_seed: u64,
    pub wall: Duration,
    pub result: Result<RunTrace, String>,
}

/// A generated problem before and after preparation.
pub struct Problem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub system: PreparedSystem,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Noise seed for a run; depends only on the master seed, the seed entry and `n`,
/// so every `(d, T, l, mode)` cell sees the same conductivity realisations.
pub fn derive_seed(master: u64, entry: u64, n: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ entry) ^ n as u64)
}

pub fn build_problem(cfg: &RunConfig, point: &RunPoint, noise_seed: u64) -> avqls_core::Result<Problem> {
    let mut problem = cfg.problem.clone();
    problem.l = point.l;
    if let Some(sigma) = point.sigma {
        problem.sigma = Some(sigma);
    }
    let (a, b, lambdas) = heat_system(&problem.profile(noise_seed), &problem.source_spec(), point.n)?;
    let (a, lambdas) = if problem.debug_identity {
        (DMatrix::identity(a.nrows(), a.ncols()), None)
    } else {
        (a, Some(lambdas))
    };
    let system = prepare(&a, &b, &PrepareOptions::default())?;
    Ok(Problem { a, b, lambdas, system })
}

pub fn execute(cfg: &RunConfig, point: RunPoint) -> RunOutcome {
    let noise_seed = derive_seed(cfg.seed, point.seed, point.n);
    let start = Instant::now();
    let result = build_problem(cfg, &point, noise_seed).and_then(|p| {
        let ansatz = cfg.solver.ansatz(p.system.n_qubits, point.d);
        solve_adiabatic(&p.system, &ansatz, point.steps, &cfg.solver.controller(point.mode)).map(|(_, t)| t)
    });
    RunOutcome { point, noise_seed, wall: start.elapsed(), result: result.map_err(|e| e.to_string()) }
}

/// The run described by the `[solver]` and `[problem]` blocks alone.
pub fn single_point(cfg: &RunConfig) -> RunPoint {
    RunPoint {
        n: cfg.solver.n,
        d: cfg.solver.d,
        steps: cfg.solver.steps,
        mode: cfg.solver.mode,
        l: cfg.problem.l,
        sigma: cfg.problem.conductivity.is_noisy().then(|| cfg.problem.sigma()),
        seed: cfg.problem.seed,
    }
}

pub fn run_single(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let out = execute(cfg, single_point(cfg));
    match &out.result {
        Ok(_) => Ok(out),
        Err(e) => Err(CliError::Solver(e.clone())),
    }
}

/// Cartesian product of the sweep lists, in a fixed order.
pub fn sweep_points(cfg: &RunConfig) -> Vec<RunPoint> {
    let base = single_point(cfg);
    let w = &cfg.sweep;
    let ns = w.n.clone().unwrap_or(vec![base.n]);
    let ds = w.d.clone().unwrap_or(vec![base.d]);
    let ts = w.steps.clone().unwrap_or(vec![base.steps]);
    let modes = w.modes.clone().unwrap_or(vec![base.mode]);
    let ls = if cfg.problem.source == Source::Exponential { w.l.clone().unwrap_or(vec![base.l]) } else { vec![base.l] };
    let sigmas: Vec<Option<f64>> = match (&w.sigma, base.sigma) {
        (Some(list), _) => list.iter().copied().map(Some).collect(),
        (None, s) => vec![s],
    };
    let seeds = w.seeds.clone().unwrap_or(vec![base.seed]);

    let mut points = Vec::new();
    for &n in &ns {
        for &d in &ds {
            for &steps in &ts {
                for &mode in &modes {
                    for &l in &ls {
                        for &sigma in &sigmas {
                            for &seed in &seeds {
                                points.push(RunPoint { n, d, steps, mode, l, sigma, seed });
                            }
                        }
                    }
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, min, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub mode: ScheduleMode,
    pub l: f64,
    pub sigma: Option<f64>,
    pub runs: usize,
    pub failures: usize,
    pub infidelity: Option<Stats>,
    pub accuracy: Option<Stats>,
    pub step_fraction: Option<Stats>,
}

pub struct SweepResult {
    pub runs: Vec<RunOutcome>,
    pub cells: Vec<CellSummary>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.result.is_err()).count()
    }
}

fn summarize(runs: &[RunOutcome]) -> Vec<CellSummary> {
    let mut cells: Vec<(RunPoint, Vec<&RunOutcome>)> = Vec::new();
    for r in runs {
        match cells.iter_mut().find(|(p, _)| p.cell() == r.point.cell()) {
            Some((_, members)) => members.push(r),
            None => cells.push((r.point, vec![r])),
        }
    }
    cells
        .into_iter()
        .map(|(p, members)| {
            let ok: Vec<&RunTrace> = members.iter().filter_map(|r| r.result.as_ref().ok()).collect();
            let pick = |f: &dyn Fn(&RunTrace) -> f64| Stats::of(&ok.iter().map(|t| f(t)).collect::<Vec<_>>());
            CellSummary {
                n: p.n,
                d: p.d,
                steps: p.steps,
                mode: p.mode,
                l: p.l,
                sigma: p.sigma,
                runs: members.len(),
                failures: members.len() - ok.len(),
                infidelity: pick(&|t| t.report.as_ref().map_or(f64::NAN, |r| r.infidelity)),
                accuracy: pick(&|t| t.report.as_ref().map_or(f64::NAN, |r| r.accuracy)),
                step_fraction: pick(&|t| t.step_fraction()),
            }
        })
        .collect()
}

/// Runs every sweep point on a pool of `jobs` workers (0 = all cores).
pub fn run_sweep(cfg: &RunConfig, jobs: usize) -> Result<SweepResult, CliError> {
    let points = sweep_points(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Solver(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunOutcome> = pool.install(|| points.into_par_iter().map(|p| execute(cfg, p)).collect());
    for r in &runs {
        if let Err(e) = &r.result {
            log::warn!("run {:?} failed: {e}", r.point);
        }
    }
    let cells = summarize(&runs);
    Ok(SweepResult { runs, cells })
}

pub fn emit_schedule(kappa: f64, steps: usize, format: Format) -> Result<String, CliError> {
    let sched = Schedule::default_sequence(kappa, steps).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(match format {
        Format::Csv => {
            let mut out = String::from("j,s\n");
            for (j, s) in sched.s_grid.iter().enumerate() {
                out.push_str(&format!("{j},{s}\n"));
            }
            out
        }
        Format::Json => serde_json::to_string_pretty(&sched).expect("schedule serializes") + "\n",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_entry_and_size_only() {
        assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
        assert_ne!(derive_seed(0, 2, 3), derive_seed(1, 2, 3));
    }

    #[test]
    fn schedule_rows() {
        assert_eq!(emit_schedule(1.0, 2, Format::Csv).unwrap(), "j,s\n0,0\n1,0.5\n2,1\n");
        assert_eq!(emit_schedule(7.0, 1, Format::Csv).unwrap(), "j,s\n0,0\n1,1\n");
        let csv = emit_schedule(1e3, 100, Format::Csv).unwrap();
        let mut s: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        s.sort_by(f64::total_cmp);
        assert!(s[50] > 0.9);
    }

    #[test]
    fn sweep_expands_in_order() {
        let cfg = RunConfig::parse(
            "[problem]\nsource = \"exponential\"\n[sweep]\nn = [2, 3]\nl = [0.0, 5.0]\nseeds = [0, 1, 2]",
        )
        .unwrap();
        let points = sweep_points(&cfg);
        assert_eq!(points.len(), 12);
        assert_eq!((points[0].n, points[0].l, points[0].seed), (2, 0.0, 0));
        assert_eq!((points[11].n, points[11].l, points[11].seed), (3, 5.0, 2));
    }

    #[test]
    fn identity_debug_problem_jumps_once() {
        let cfg = RunConfig::parse("[problem]\ndebug_identity = true\n[solver]\nn = 3\nT = 10").unwrap();
        let out = run_single(&cfg).unwrap();
        let trace = out.result.unwrap();
        assert_eq!(trace.effective_steps, 1);
        assert_eq!(trace.report.unwrap().infidelity, 0.0);
    }
}
