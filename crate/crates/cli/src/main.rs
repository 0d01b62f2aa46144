use std::path::PathBuf;
use std::process::ExitCode;

use avqls_cli::config::{Format, RunConfig};
use avqls_cli::{output, run, CliError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "avqls", version, about = "Adiabatic variational linear solver experiments")]
struct Cli {
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides the top-level `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Restrict output to one format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver once on the configured problem.
    Solve { config: PathBuf },
    /// Run every combination in the `[sweep]` block.
    Sweep { config: PathBuf },
    /// Print the default step sequence for a condition number.
    Schedule {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Run the built-in numerical self checks.
    Verify,
}

fn load(cli: &Cli, path: &PathBuf) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.output.formats = vec![f.into()];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(files: &[PathBuf]) {
    for f in files {
        log::info!("wrote {}", f.display());
    }
}

fn main_inner(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve { config } => {
            let cfg = load(cli, config)?;
            let out = run::run_single(&cfg)?;
            let files = output::write_single(&cfg.output.dir, &cfg, &out)?;
            report(&files);
            if let Ok(trace) = &out.result {
                let r = trace.report.as_ref();
                println!(
                    "kappa {:.4e}  steps {}/{}  infidelity {:.4e}  accuracy {:.6}  wall {:.1} ms",
                    trace.kappa,
                    trace.effective_steps,
                    trace.steps_budget,
                    r.map_or(f64::NAN, |r| r.infidelity),
                    r.map_or(f64::NAN, |r| r.accuracy),
                    out.wall.as_secs_f64() * 1e3,
                );
            }
            Ok(())
        }
        Command::Sweep { config } => {
            let cfg = load(cli, config)?;
            let sweep = run::run_sweep(&cfg, cli.jobs)?;
            let files = output::write_sweep(&cfg.output.dir, &cfg, &sweep)?;
            report(&files);
            let (failed, total) = (sweep.failures(), sweep.runs.len());
            println!("{} cells, {} runs, {} failed", sweep.cells.len(), total, failed);
            if failed > 0 {
                return Err(CliError::PartialSweep { failed, total });
            }
            Ok(())
        }
        Command::Schedule { kappa, steps } => {
            let format = cli.format.map_or(Format::Csv, Format::from);
            print!("{}", run::emit_schedule(*kappa, *steps, format)?);
            Ok(())
        }
        Command::Verify => {
            let checks = avqls_core::verify::run_all(cli.seed.unwrap_or(0));
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(CliError::Solver(format!("{failed} of {} checks failed", checks.len())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("avqls: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
