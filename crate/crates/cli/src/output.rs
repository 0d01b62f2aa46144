//! Result files for single runs and sweeps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use avqls_core::{write_problem, RunTrace, ScheduleMode, StepRecord};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::run::{build_problem, CellSummary, RunOutcome, SweepResult};
use crate::CliError;

#[derive(Debug, Serialize)]
struct RunRow {
    n: usize,
    d: usize,
    #[serde(rename = "T")]
    steps: usize,
    mode: ScheduleMode,
    l: f64,
    sigma: Option<f64>,
    seed: u64,
    noise_seed: u64,
    kappa: Option<f64>,
    embedded: Option<bool>,
    effective_steps: Option<usize>,
    step_fraction: Option<f64>,
    infidelity: Option<f64>,
    accuracy: Option<f64>,
    cost_final: Option<f64>,
    circuit_evaluations: Option<u64>,
    eigen_solves: Option<u64>,
    wall_ms: f64,
    error: String,
}

impl RunRow {
    fn new(r: &RunOutcome) -> Self {
        let t = r.result.as_ref().ok();
        let report = t.and_then(|t| t.report.as_ref());
        Self {
            n: r.point.n,
            d: r.point.d,
            steps: r.point.steps,
            mode: r.point.mode,
            l: r.point.l,
            sigma: r.point.sigma,
            seed: r.point.seed,
            noise_seed: r.noise_seed,
            kappa: t.map(|t| t.kappa),
            embedded: t.map(|t| t.embedded),
            effective_steps: t.map(|t| t.effective_steps),
            step_fraction: t.map(RunTrace::step_fraction),
            infidelity: report.map(|r| r.infidelity),
            accuracy: report.map(|r| r.accuracy),
            cost_final: t.map(|t| t.cost_final),
            circuit_evaluations: t.map(|t| t.circuit_evaluations as u64),
            eigen_solves: t.map(|t| t.eigen_solves as u64),
            wall_ms: r.wall.as_secs_f64() * 1e3,
            error: r.result.as_ref().err().cloned().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CellRow {
    n: usize,
    d: usize,
    #[serde(rename = "T")]
    steps: usize,
    mode: ScheduleMode,
    l: f64,
    sigma: Option<f64>,
    runs: usize,
    failures: usize,
    infidelity_mean: Option<f64>,
    infidelity_min: Option<f64>,
    infidelity_max: Option<f64>,
    accuracy_mean: Option<f64>,
    accuracy_min: Option<f64>,
    accuracy_max: Option<f64>,
    step_fraction_mean: Option<f64>,
    step_fraction_min: Option<f64>,
    step_fraction_max: Option<f64>,
}

impl From<&CellSummary> for CellRow {
    fn from(c: &CellSummary) -> Self {
        Self {
            n: c.n,
            d: c.d,
            steps: c.steps,
            mode: c.mode,
            l: c.l,
            sigma: c.sigma,
            runs: c.runs,
            failures: c.failures,
            infidelity_mean: c.infidelity.map(|s| s.mean),
            infidelity_min: c.infidelity.map(|s| s.min),
            infidelity_max: c.infidelity.map(|s| s.max),
            accuracy_mean: c.accuracy.map(|s| s.mean),
            accuracy_min: c.accuracy.map(|s| s.min),
            accuracy_max: c.accuracy.map(|s| s.max),
            step_fraction_mean: c.step_fraction.map(|s| s.mean),
            step_fraction_min: c.step_fraction.map(|s| s.min),
            step_fraction_max: c.step_fraction.map(|s| s.max),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_steps(path: &Path, steps: &[StepRecord]) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "{}", StepRecord::CSV_HEADER)?;
    for s in steps {
        writeln!(w, "{}", s.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

fn run_stem(r: &RunOutcome) -> String {
    let p = &r.point;
    let mode = serde_json::to_value(p.mode).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let mut stem = format!("n{}_d{}_T{}_{mode}_l{}", p.n, p.d, p.steps, p.l);
    if let Some(sigma) = p.sigma {
        stem.push_str(&format!("_sigma{sigma}"));
    }
    stem.push_str(&format!("_seed{}", p.seed));
    stem
}

/// Writes the files of one run into `dir` and returns their paths.
pub fn write_single(dir: &Path, cfg: &RunConfig, out: &RunOutcome) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let trace = out.result.as_ref().map_err(|e| CliError::Solver(e.clone()))?;
    let mut written = Vec::new();

    let path = dir.join("config.toml");
    fs::write(&path, cfg.to_toml())?;
    written.push(path);

    if cfg.output.wants(Format::Json) {
        let path = dir.join("trace.json");
        fs::write(&path, trace.to_json() + "\n")?;
        written.push(path);
    }
    if cfg.output.wants(Format::Csv) {
        let path = dir.join("summary.csv");
        write_rows(&path, [RunRow::new(out)])?;
        written.push(path);
        let path = dir.join("steps.csv");
        write_steps(&path, &trace.steps)?;
        written.push(path);
    }
    if cfg.output.dump_problem {
        let problem = build_problem(cfg, &out.point, out.noise_seed).map_err(|e| CliError::Solver(e.to_string()))?;
        let path = dir.join("problem.txt");
        let mut w = create(&path)?;
        write_problem(&mut w, &problem.a, &problem.b, problem.lambdas.as_deref())?;
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Serialize)]
struct SweepJson<'a> {
    config: &'a RunConfig,
    cells: &'a [CellSummary],
    runs: Vec<RunJson>,
}

#[derive(Serialize)]
struct RunJson {
    #[serde(flatten)]
    row: RunRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_file: Option<String>,
}

/// Writes sweep tables and, with JSON output, one trace per run under `traces/`.
pub fn write_sweep(dir: &Path, cfg: &RunConfig, sweep: &SweepResult) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("config.toml");
    fs::write(&path, cfg.to_toml())?;
    written.push(path);

    if cfg.output.wants(Format::Csv) {
        let path = dir.join("sweep_cells.csv");
        write_rows(&path, sweep.cells.iter().map(CellRow::from))?;
        written.push(path);
        let path = dir.join("sweep_runs.csv");
        write_rows(&path, sweep.runs.iter().map(RunRow::new))?;
        written.push(path);
    }
    if cfg.output.wants(Format::Json) {
        let traces = dir.join("traces");
        fs::create_dir_all(&traces)?;
        let mut runs = Vec::with_capacity(sweep.runs.len());
        for r in &sweep.runs {
            let trace_file = match r.result.as_ref().ok() {
                Some(t) => {
                    let name = format!("traces/{}.json", run_stem(r));
                    fs::write(dir.join(&name), t.to_json() + "\n")?;
                    Some(name)
                }
                None => None,
            };
            runs.push(RunJson { row: RunRow::new(r), trace_file });
        }
        let path = dir.join("sweep.json");
        let doc = SweepJson { config: cfg, cells: &sweep.cells, runs };
        fs::write(&path, serde_json::to_string_pretty(&doc).expect("sweep serializes") + "\n")?;
        written.push(path);
    }
    Ok(written)
}
