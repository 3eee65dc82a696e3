use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use nsac::config::{ExperimentConfig, ExperimentKind};
use nsac::experiment::{
    check_energy, check_eoc, default_max_cells, run_convergence_space, run_convergence_time,
    run_energy, run_single, write_convergence_csv, write_energy_csv, Check, EnergySeries,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "nsac", version, about = "Experiment runner for the 1D NSAC dG solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spatial convergence table on the manufactured solution.
    ConvergenceSpace(Opts),
    /// Temporal convergence table on the manufactured solution.
    ConvergenceTime(Opts),
    /// Energy and mass time series for one or more mobilities.
    Energy(Opts),
    /// One run with its diagnostics series and an optional field dump.
    SingleRun(Opts),
}

#[derive(Args)]
struct Opts {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; overrides `output` in the config, stdout if neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the pass/fail criteria of the experiment and exit with 4 on failure.
    #[arg(long)]
    check: bool,
    /// Largest mesh allowed in a spatial study (default 128 for k >= 2, 256 otherwise).
    #[arg(long)]
    max_cells: Option<usize>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Other(anyhow::Error),
}

impl From<nsac::Error> for Failure {
    fn from(e: nsac::Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.into())
        } else if matches!(e, nsac::Error::Config(_) | nsac::Error::InvalidInput(_)) {
            Failure::Config(e.into())
        } else {
            Failure::Other(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// `energy.csv` → `energy_eta10.csv`.
fn with_eta_suffix(path: &Path, eta: f64) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_eta{eta}{ext}"))
}

fn write_energy(series: &[EnergySeries], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) if series.len() > 1 => {
            for s in series {
                let path = with_eta_suffix(p, s.eta);
                write_energy_csv(&s.records, open_out(Some(&path))?)?;
                info!("wrote {}", path.display());
            }
        }
        _ => {
            for s in series {
                let mut w = open_out(out)?;
                if series.len() > 1 {
                    writeln!(w, "# eta = {}", s.eta).map_err(anyhow::Error::from)?;
                }
                write_energy_csv(&s.records, w)?;
            }
        }
    }
    Ok(())
}

fn run(kind: ExperimentKind, opts: &Opts) -> Result<Vec<Check>, Failure> {
    let cfg = ExperimentConfig::load(&opts.config).map_err(|e| Failure::Config(e.into()))?;
    if cfg.experiment != kind {
        return Err(Failure::Config(anyhow!(
            "config describes a {:?} experiment, not {kind:?}",
            cfg.experiment
        )));
    }
    if let Some(n) = opts.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(anyhow!("cannot set up {n} threads: {e}")))?;
    }
    let out = opts.out.as_deref().or(cfg.output.as_deref());
    let k = cfg.degree;
    match kind {
        ExperimentKind::ConvergenceSpace => {
            let cap = opts.max_cells.unwrap_or_else(|| default_max_cells(k));
            if let Some(n) = cfg.cells.iter().find(|&&n| n > cap) {
                return Err(Failure::Config(anyhow!(
                    "N = {n} exceeds the cap of {cap} cells for degree {k}; raise it with --max-cells"
                )));
            }
            let rows = run_convergence_space(&cfg)?;
            write_convergence_csv(&rows, kind, open_out(out)?)?;
            let (lo, hi) = (k as f64 + 0.7, k as f64 + 1.3);
            Ok(vec![check_eoc("spatial order", &rows, lo, hi)])
        }
        ExperimentKind::ConvergenceTime => {
            let rows = run_convergence_time(&cfg)?;
            write_convergence_csv(&rows, kind, open_out(out)?)?;
            Ok(vec![check_eoc("temporal order", &rows, 1.8, 2.2)])
        }
        ExperimentKind::Energy => {
            let series = run_energy(&cfg)?;
            write_energy(&series, out)?;
            Ok(check_energy(&series, &cfg.flux_params()?))
        }
        ExperimentKind::SingleRun => {
            let mut dump = match &cfg.field_dump {
                Some(p) => Some(open_out(Some(p))?),
                None => None,
            };
            let res = run_single(&cfg, dump.as_mut().map(|w| w.as_mut() as &mut dyn Write))?;
            if let Some(e) = res.final_errors {
                eprintln!(
                    "final L2 errors: rho {:.6e}, v {:.6e}, phi {:.6e}",
                    e.rho, e.v, e.phi
                );
            }
            write_energy_csv(&res.trajectory.diagnostics, open_out(out)?)?;
            if cfg.initial_condition.is_source_free() {
                let series = EnergySeries {
                    eta: cfg.physics.eta,
                    records: res.trajectory.diagnostics,
                };
                Ok(check_energy(&[series], &cfg.flux_params()?))
            } else {
                Ok(Vec::new())
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, opts) = match &cli.command {
        Command::ConvergenceSpace(o) => (ExperimentKind::ConvergenceSpace, o),
        Command::ConvergenceTime(o) => (ExperimentKind::ConvergenceTime, o),
        Command::Energy(o) => (ExperimentKind::Energy, o),
        Command::SingleRun(o) => (ExperimentKind::SingleRun, o),
    };
    match run(kind, opts) {
        Ok(checks) => {
            if !opts.check {
                return ExitCode::SUCCESS;
            }
            let mut failed = false;
            for c in &checks {
                let status = match (c.passed, c.soft) {
                    (true, _) => "PASS",
                    (false, true) => "WARN",
                    (false, false) => "FAIL",
                };
                eprintln!("{status} {}: {}", c.name, c.detail);
                if !c.passed && c.soft {
                    warn!("{} failed (soft check)", c.name);
                }
                failed |= !c.passed && !c.soft;
            }
            if failed {
                ExitCode::from(EXIT_CHECK)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
