//! Command-line front end: simulate exterior data, reconstruct, run
//! contraction studies, reproduce the batch experiments, replay manifests.
//!
//! Exit codes: 0 on success (and when the contraction estimate holds),
//! 1 on usage errors, 2 on numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fullfield::phantoms::{PhantomKind, SpeedKind};
use fullfield::runner::{
    replay, run_contraction, run_experiment, run_reconstruct, run_simulate, ContractionParams,
    ExperimentName, ExperimentParams, ReconstructParams, RunManifest, SimulateParams,
};
use fullfield::Error;

#[derive(Parser)]
#[command(name = "fullfield", about = "Full-field photoacoustic tomography pipeline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate exterior single-time data for a phantom and sound speed.
    Simulate(SimulateArgs),
    /// Reconstruct the initial pressure from a data file.
    Reconstruct(ReconstructArgs),
    /// Measure contraction ratios of the error operator on random fields.
    Contraction(ContractionArgs),
    /// Reproduce a batch experiment (constant|variable|noisy|trapping).
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

fn parse_phantom(s: &str) -> Result<PhantomKind, String> {
    PhantomKind::parse(s).map_err(|e| e.to_string())
}

fn parse_speed(s: &str) -> Result<SpeedKind, String> {
    SpeedKind::parse(s).map_err(|e| e.to_string())
}

fn parse_experiment(s: &str) -> Result<ExperimentName, String> {
    ExperimentName::parse(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    /// Phantom: a (smooth), b or c (piecewise constant).
    #[arg(long, value_parser = parse_phantom)]
    phantom: PhantomKind,
    /// Sound speed profile I..IV.
    #[arg(long, value_parser = parse_speed)]
    speed: SpeedKind,
    #[arg(long = "N", default_value_t = 128)]
    n: usize,
    #[arg(long = "T", default_value_t = 2.0)]
    t: f64,
    /// Box half-width; defaults to T + 1.25.
    #[arg(long)]
    a: Option<f64>,
    /// Odd refinement factor for the simulation grid.
    #[arg(long, default_value_t = 3)]
    oversample: usize,
    /// Relative noise level (fraction of max pressure).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output field file; preview and manifest are written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Input data field file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_speed)]
    speed: SpeedKind,
    #[arg(long = "N", default_value_t = 128)]
    n: usize,
    #[arg(long = "T", default_value_t = 2.0)]
    t: f64,
    #[arg(long)]
    a: Option<f64>,
    /// Relaxation parameter in (0, 2].
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 80)]
    iters: usize,
    /// Optional ground-truth field file for error logging and images.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Prefix for the reconstruction, log, image and manifest files.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct ContractionArgs {
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_parser = parse_speed, default_value = "I")]
    speed: SpeedKind,
    #[arg(long = "T", default_value_t = 2.0)]
    t: f64,
    #[arg(long = "N", default_value_t = 128)]
    n: usize,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of constant|variable|noisy|trapping.
    #[arg(long, value_parser = parse_experiment)]
    name: ExperimentName,
    /// Output directory; defaults to experiments/<name>.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 80)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReplayArgs {
    /// Manifest file written by a previous run.
    manifest: PathBuf,
    /// Re-root outputs under this directory (inputs stay as recorded).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn print_artifacts(manifest: &RunManifest) {
    for artifact in &manifest.artifacts {
        println!("wrote {}", artifact.display());
    }
    println!("manifest {}", manifest.path.display());
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. }
        | Error::CgDidNotConverge { .. }
        | Error::Blowup { .. }
        | Error::NonFinite { .. }
        | Error::CflViolation { .. } => 2,
        Error::Iteration { source, .. } => exit_code_for(source),
        _ => 1,
    }
}

fn run(cli: Cli) -> fullfield::Result<u8> {
    match cli.command {
        Command::Simulate(args) => {
            let manifest = run_simulate(&SimulateParams {
                phantom: args.phantom,
                speed: args.speed,
                n: args.n,
                t: args.t,
                a: args.a,
                oversample: args.oversample,
                noise: args.noise,
                seed: args.seed,
                out: args.out,
            })?;
            print_artifacts(&manifest);
            Ok(0)
        }
        Command::Reconstruct(args) => {
            let outcome = run_reconstruct(&ReconstructParams {
                data: args.data,
                speed: args.speed,
                n: args.n,
                t: args.t,
                a: args.a,
                lambda: args.lambda,
                iters: args.iters,
                truth: args.truth,
                out_prefix: args.out_prefix,
            })?;
            print_artifacts(&outcome.manifest);
            if let Some(last) = outcome.log.records.last() {
                println!("final residual_h10 {:.6e}", last.residual_h10);
            }
            if let Some(report) = &outcome.report {
                println!("final rel errors: l2 {:.6e}, h10 {:.6e}", report.l2_rel, report.h10_rel);
            }
            Ok(0)
        }
        Command::Contraction(args) => {
            let report = run_contraction(&ContractionParams {
                lambda: args.lambda,
                trials: args.trials,
                speed: args.speed,
                t: args.t,
                n: args.n,
                a: args.a,
                seed: args.seed,
            })?;
            for (trial, ratio) in report.ratios.iter().enumerate() {
                println!("trial {trial}: ratio {ratio:.6}");
            }
            println!("max ratio {:.6}", report.max_ratio);
            Ok(if report.max_ratio < 1.0 { 0 } else { 2 })
        }
        Command::Experiment(args) => {
            let out_dir = args
                .out_dir
                .unwrap_or_else(|| PathBuf::from("experiments").join(args.name.tag()));
            let manifest = run_experiment(&ExperimentParams {
                name: args.name,
                out_dir,
                n: args.n,
                iters: args.iters,
                seed: args.seed,
            })?;
            print_artifacts(&manifest);
            Ok(0)
        }
        Command::Replay(args) => {
            let manifest = replay(&args.manifest, args.out_dir.as_deref())?;
            print_artifacts(&manifest);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            if err.use_stderr() {
                let rendered = err.to_string();
                let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
                eprintln!("{line}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
