use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nsseries::calibration::calibrate_constant;
use nsseries::convolution::Convolver;
use nsseries::experiment::{emit_report, load_config, run_experiment, ExperimentConfig, ExperimentReport, ReportFormat};
use nsseries::grid::FrequencyGrid;
use nsseries::inequalities::run_inequality_suite;

/// Thread count override for the rayon pool.
const THREADS_ENV: &str = "NSSERIES_THREADS";

#[derive(Parser)]
#[command(name = "nsseries", version, about = "Fourier-space series solutions of the Navier-Stokes equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every enabled phase of a config and write its report.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized checks of the scalar inequalities.
    CheckInequalities {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        cases: usize,
    },
    /// Fit the convolution constant on the bump corpus.
    CalibrateConstant {
        #[arg(long, default_value_t = 32)]
        corpus_size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Take the grid and convolution method from this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Series against the pseudo-spectral oracle only.
    CompareOracle { config: PathBuf },
    /// Growth-order fits of the complex extension only.
    Growth { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(THREADS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size thread pool: {e}");
                }
            }
            _ => eprintln!("warning: ignoring {THREADS_ENV}={n}"),
        }
    }
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> nsseries::Result<bool> {
    match command {
        Command::Run { config, out } => {
            let mut cfg = load_config(&config)?;
            if out.is_some() {
                cfg.output.dir = out;
            }
            finish(&cfg, run_experiment(&cfg)?)
        }
        Command::CheckInequalities { seed, cases } => {
            let outcomes = run_inequality_suite(seed, cases);
            for o in &outcomes {
                let tag = if o.passed() { "PASS" } else { "FAIL" };
                println!("{tag} {:<16} cases {:>6}  failures {:>4}  worst margin {:.3e}", o.name, o.cases, o.failures, o.worst_margin);
            }
            Ok(outcomes.iter().all(|o| o.passed()))
        }
        Command::CalibrateConstant { corpus_size, seed, config } => {
            let cfg = match config {
                Some(p) => load_config(&p)?,
                None => ExperimentConfig::with(3, 1.0),
            };
            let grid = FrequencyGrid::build(cfg.d, cfg.grid.h, cfg.grid.radius)?;
            let cal = calibrate_constant(&Convolver::new(&grid, cfg.checks.convolution), corpus_size, seed)?;
            println!("{}", serde_json::to_string_pretty(&cal)?);
            Ok(true)
        }
        Command::CompareOracle { config } => {
            let mut cfg = load_config(&config)?;
            cfg.checks.oracle = true;
            cfg.checks.envelopes = false;
            cfg.checks.complex_ext = false;
            finish(&cfg, run_experiment(&cfg)?)
        }
        Command::Growth { config } => {
            let mut cfg = load_config(&config)?;
            cfg.checks.complex_ext = true;
            cfg.checks.envelopes = false;
            cfg.checks.oracle = false;
            let report = run_experiment(&cfg)?;
            if let Some(c) = &report.complex {
                for f in &c.fits {
                    println!("t = {:<6} direction {:?}: order {:.3}, constant {:.3e}, residual {:.2e}", f.time, f.direction, f.order, f.constant, f.residual);
                }
            }
            finish(&cfg, report)
        }
    }
}

fn finish(cfg: &ExperimentConfig, report: ExperimentReport) -> nsseries::Result<bool> {
    println!("grid {} ({} modes), rho = {:.4}, C_hat = {:.4}", report.grid.fingerprint, report.grid.modes, report.smallness_ratio, report.c_hat);
    for c in &report.checks {
        println!("{} {:<20} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for e in &report.errors {
        println!("ERROR {e}");
    }
    if let Some(dir) = &cfg.output.dir {
        let mut written = emit_report(&report, dir, ReportFormat::Json)?;
        if cfg.output.csv {
            written.extend(emit_report(&report, dir, ReportFormat::Csv)?);
        }
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    Ok(report.passed())
}
