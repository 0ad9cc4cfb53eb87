mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use qkelly::solver::{solve_with, SolverOptions};
use qkelly::verify::{self, asymptotic_sweep, grid_oracle_with, mc_check, surface, write_surface_csv, write_sweep_csv};
use qkelly::Error;
use serde::Serialize;

use config::{Cli, CommandKind, ConfigError, Format, RunConfig};

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("cannot encode output: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    fn exit_code(&self) -> u8 {
        match self {
            RunError::Core(Error::IterationCap { .. } | Error::Internal(_)) => EXIT_NUMERIC,
            RunError::Config(ConfigError::Core(Error::IterationCap { .. } | Error::Internal(_))) => EXIT_NUMERIC,
            RunError::Io(_) | RunError::Json(_) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

fn output(cfg: &RunConfig) -> Result<Box<dyn Write>, RunError> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(cfg: &RunConfig, value: &T) -> Result<(), RunError> {
    let mut out = output(cfg)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        family: cfg.family.clone(),
        ..SolverOptions::default()
    }
}

fn run_solve(cfg: &RunConfig) -> Result<bool, RunError> {
    let sol = solve_with(&cfg.instance, &options(cfg))?;
    write_json(cfg, &report::solve_report(&cfg.instance, cfg.family.as_ref(), &sol))?;
    Ok(true)
}

fn run_verify(cfg: &RunConfig) -> Result<bool, RunError> {
    let sol = solve_with(&cfg.instance, &options(cfg))?;
    let grid = grid_oracle_with(&cfg.instance, cfg.resolution, cfg.family.as_ref())?;
    let mc = mc_check(&cfg.instance, &sol.argmax, cfg.samples, cfg.seed);
    let rep = report::verify_report(&cfg.instance, cfg.family.as_ref(), &sol, &grid, &mc, cfg.samples, cfg.seed);
    write_json(cfg, &rep)?;
    if !rep.pass {
        eprintln!(
            "verification failed: grid gap {:.3e} (tolerance {:.0e}), monte carlo {}",
            rep.grid.relative_gap,
            report::GRID_TOLERANCE,
            if rep.monte_carlo.pass { "ok" } else { "mismatch" }
        );
    }
    Ok(rep.pass)
}

#[derive(Serialize)]
struct SurfaceJson<'a> {
    support: String,
    w: &'a [f64],
    value: f64,
}

fn run_surface(cfg: &RunConfig) -> Result<bool, RunError> {
    let m = cfg.instance.m();
    if !(2..=3).contains(&m) {
        return Err(ConfigError::Range("m", format!("surface needs m = 2 or 3, got {m}")).into());
    }
    let rows = surface(&cfg.instance, cfg.resolution)?;
    match cfg.format {
        Format::Csv => {
            let mut out = output(cfg)?;
            write_surface_csv(&rows, m, &mut out)?;
            out.flush()?;
        }
        Format::Json => {
            let rows: Vec<SurfaceJson> = rows
                .iter()
                .map(|r| SurfaceJson {
                    support: r.support.to_string(),
                    w: &r.w,
                    value: r.value,
                })
                .collect();
            write_json(cfg, &rows)?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct SweepJson<'a> {
    n: u32,
    scaled_log_value: f64,
    kelly_distance: f64,
    argmax: &'a [f64],
}

fn run_sweep(cfg: &RunConfig) -> Result<bool, RunError> {
    let rows = asymptotic_sweep(&cfg.instance, &cfg.horizons)?;
    match cfg.format {
        Format::Csv => {
            let mut out = output(cfg)?;
            write_sweep_csv(&rows, cfg.instance.m(), &mut out)?;
            out.flush()?;
        }
        Format::Json => {
            let rows: Vec<SweepJson> = rows
                .iter()
                .map(|r| SweepJson {
                    n: r.n,
                    scaled_log_value: r.scaled_log_value,
                    kelly_distance: r.kelly_distance,
                    argmax: r.argmax.values(),
                })
                .collect();
            write_json(cfg, &rows)?;
        }
    }
    if let Some(last) = rows.last() {
        eprintln!(
            "n = {}: |scaled log value - L*| = {:.6e}, kelly distance = {:.6e}",
            last.n,
            verify::sweep_value_error(&cfg.instance, last),
            last.kelly_distance
        );
    }
    Ok(true)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(text) = std::env::var("QKELLY_THREADS") else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| ConfigError::Range("QKELLY_THREADS", format!("expected a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| ConfigError::Range("QKELLY_THREADS", e.to_string()))
}

fn run(kind: CommandKind, flags: config::Flags) -> Result<bool, RunError> {
    configure_threads()?;
    let cfg = RunConfig::resolve(kind, flags)?;
    match cfg.command {
        CommandKind::Solve => run_solve(&cfg),
        CommandKind::Surface => run_surface(&cfg),
        CommandKind::Verify => run_verify(&cfg),
        CommandKind::Sweep => run_sweep(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = cli.command.split();
    match run(kind, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAIL),
        Err(e) => {
            eprintln!("qkelly: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
