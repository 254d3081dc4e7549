//! `tcat`: command-line runner.
//!
//! Exit status 0 on success, 2 on invalid input, 3 on numerical failure.

mod commands;
mod config;
mod output;

use std::os::unix::process::CommandExt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::*;
use tcat::ctmrg_engine::{blas_is_sound, CORETYPE_VAR};
use tcat::{Error, Result};

pub const OUT_DIR_VAR: &str = "TCAT_OUT_DIR";
pub const WORKERS_VAR: &str = "TCAT_WORKERS";
const REEXEC_VAR: &str = "TCAT_REEXECUTED";
const BLAS_THREADS_VAR: &str = "OPENBLAS_NUM_THREADS";

#[derive(Parser)]
#[command(name = "tcat", version, about = "Toric code under coherent noise: couplings, exact tori, CTMRG sweeps")]
struct Cli {
    /// TOML config file (or a JSON result whose provenance block is reused).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct NoiseOnly {
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args)]
struct NoiseCheck {
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    axis: AxisArgs,
}

#[derive(Args)]
struct Point {
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    ctmrg: CtmrgArgs,
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    ctmrg: CtmrgArgs,
}

#[derive(Args)]
struct Bisect {
    #[command(flatten)]
    bisect: BisectArgs,
    #[command(flatten)]
    ctmrg: CtmrgArgs,
}

#[derive(Args)]
struct OnTorus {
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    torus: TorusArgs,
}

#[derive(Args)]
struct FitC {
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    ctmrg: CtmrgArgs,
}

#[derive(Args)]
struct FitB {
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    ctmrg: CtmrgArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Linear and exponential AT couplings of a noise channel.
    MapCouplings(NoiseOnly),
    /// R of an angle distribution and the stochastic-noise comparison.
    NoiseCheck(NoiseCheck),
    /// One CTMRG run.
    CtmrgPoint(Point),
    /// Parallel CTMRG sweep written as CSV, gnuplot data and a JSON summary.
    Sweep(Sweep),
    /// Phase-label bisection along a coupling path.
    Bisect(Bisect),
    /// Rényi-2 coherent information on a torus.
    CoherentInfo(OnTorus),
    /// Order and disorder correlators at maximal separation on a torus.
    AnyonParams(OnTorus),
    /// Closed-form pure-y results.
    StaggeredVertex(StaggeredArgs),
    /// Entropy against log ξ over a bond-dimension ladder.
    FitCentralCharge(FitC),
    /// Magnetization exponent past the second amplitude-damping transition.
    FitBeta(FitB),
    /// (κ, Δφ) boundary for equal-weight double von Mises noise.
    VonMisesBoundary(VonMisesArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::MapCouplings(_) => "map-couplings",
            Command::NoiseCheck(_) => "noise-check",
            Command::CtmrgPoint(_) => "ctmrg-point",
            Command::Sweep(_) => "sweep",
            Command::Bisect(_) => "bisect",
            Command::CoherentInfo(_) => "coherent-info",
            Command::AnyonParams(_) => "anyon-params",
            Command::StaggeredVertex(_) => "staggered-vertex",
            Command::FitCentralCharge(_) => "fit-central-charge",
            Command::FitBeta(_) => "fit-beta",
            Command::VonMisesBoundary(_) => "von-mises-boundary",
        }
    }

    fn uses_ctmrg(&self) -> bool {
        match self {
            Command::CtmrgPoint(_) | Command::Sweep(_) | Command::Bisect(_) => true,
            Command::FitCentralCharge(f) => f.fit.input.is_none(),
            Command::FitBeta(f) => f.fit.input.is_none(),
            _ => false,
        }
    }
}

/// Restarts the process with OpenBLAS settings that only take effect at load time.
fn ensure_blas_env(deterministic: bool, ctmrg: bool) -> Result<()> {
    if std::env::var_os(REEXEC_VAR).is_some() {
        return Ok(());
    }
    let mut vars = Vec::new();
    if deterministic && std::env::var(BLAS_THREADS_VAR).as_deref() != Ok("1") {
        vars.push((BLAS_THREADS_VAR, "1"));
    }
    if ctmrg && std::env::var_os(CORETYPE_VAR).is_none() && !blas_is_sound() {
        vars.push((CORETYPE_VAR, "Haswell"));
    }
    if vars.is_empty() {
        return Ok(());
    }
    let exe = std::env::current_exe()?;
    let err = std::process::Command::new(exe)
        .args(std::env::args_os().skip(1))
        .envs(vars)
        .env(REEXEC_VAR, "1")
        .exec();
    Err(Error::Io(err))
}

fn run(cli: Cli) -> Result<String> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let base = cli.config.as_deref().and_then(|p| p.parent()).map(|p| p.to_path_buf());
    let run = cli.run.merge(file.run.clone().unwrap_or_default())?;
    ensure_blas_env(run.deterministic, cli.command.uses_ctmrg())?;
    if let Some(n) = run.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    }
    let name = cli.command.name();
    let sink = output::Sink::new(
        run.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        run.name.clone().unwrap_or_else(|| name.to_string()),
    )?;
    match cli.command {
        Command::MapCouplings(a) => commands::map_couplings(merged(a.noise, &file.noise), &run, &sink),
        Command::NoiseCheck(a) => {
            let axis = merged(a.axis, &file.noise.as_ref().map(|n| n.axis.clone()));
            commands::noise_check(merged(a.dist, &file.dist), axis, &run, &sink, base.as_deref())
        }
        Command::CtmrgPoint(a) => {
            commands::ctmrg_point(merged(a.noise, &file.noise), merged(a.ctmrg, &file.ctmrg), &run, &sink)
        }
        Command::Sweep(a) => commands::sweep(merged(a.sweep, &file.sweep), merged(a.ctmrg, &file.ctmrg), &run, &sink),
        Command::Bisect(a) => {
            commands::bisect(merged(a.bisect, &file.bisect), merged(a.ctmrg, &file.ctmrg), &run, &sink)
        }
        Command::CoherentInfo(a) => {
            commands::coherent_info(merged(a.noise, &file.noise), merged(a.torus, &file.torus), &run, &sink)
        }
        Command::AnyonParams(a) => {
            commands::anyon_params(merged(a.noise, &file.noise), merged(a.torus, &file.torus), &run, &sink)
        }
        Command::StaggeredVertex(a) => commands::staggered_vertex(merged(a, &file.staggered), &run, &sink),
        Command::FitCentralCharge(a) => commands::fit_central_charge(
            merged(a.fit, &file.fit),
            merged(a.noise, &file.noise),
            merged(a.ctmrg, &file.ctmrg),
            &run,
            &sink,
        ),
        Command::FitBeta(a) => commands::fit_beta(merged(a.fit, &file.fit), merged(a.ctmrg, &file.ctmrg), &run, &sink),
        Command::VonMisesBoundary(a) => commands::von_mises(merged(a, &file.von_mises), &run, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
