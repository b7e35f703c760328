//! `zalcman`: renders Julia and Mandelbrot sets, compares rescaled sets at
//! Misiurewicz parameters, runs parameter censuses and conical-point testers.
//!
//! Exit codes: 0 success, 2 configuration error, 3 computation error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zalcman::Complex64;

use config::*;
use output::OutDir;

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Compute(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Compute(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "zalcman",
    version,
    about = "Zalcman rescaling experiments for z^d + c"
)]
struct Cli {
    /// JSON job file; flags given on the command line override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write PNG copies of every image.
    #[arg(long, global = true)]
    png: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a Julia or Mandelbrot set as a mask.
    Render(RenderArgs),
    /// Compare rescaled Julia and Mandelbrot sets at a Misiurewicz parameter.
    Similarity(SimilarityArgs),
    /// Misiurewicz or superattracting parameters, or sequences of them.
    Census(CensusArgs),
    /// Conical-point testers at a Julia-set point.
    Conical(ConicalArgs),
    /// Sample the Poincaré linearizer at a repelling cycle.
    Poincare(PoincareArgs),
}

fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s)
}

#[derive(Args)]
struct RenderArgs {
    kind: SetKind,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: Option<Complex64>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    center: Option<Complex64>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long, short = 'n')]
    resolution: Option<usize>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    style: Option<Style>,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c0: Option<Complex64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, short = 'n')]
    resolution: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    model_depth: Option<usize>,
    /// Skip the per-k panel images.
    #[arg(long)]
    no_panels: bool,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    mode: Option<CensusMode>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    target: Option<Complex64>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    preperiod: Option<usize>,
    #[arg(long)]
    first: Option<usize>,
    #[arg(long)]
    max_index: Option<usize>,
}

#[derive(Args)]
struct ConicalArgs {
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: Option<Complex64>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    z0: Option<Complex64>,
    /// Comma-separated list of tests.
    #[arg(long, value_delimiter = ',')]
    tests: Option<Vec<ConicalTest>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    d_bound: Option<u64>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
}

#[derive(Args)]
struct PoincareArgs {
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    c: Option<Complex64>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    seed: Option<Complex64>,
    #[arg(long)]
    radius: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(value) = value {
        *slot = value;
    }
}

fn prepare<T: serde::Serialize>(
    cli: &Cli,
    name: &str,
    job: &T,
    validate: impl FnOnce(&T) -> anyhow::Result<()>,
) -> Result<OutDir, Failure> {
    validate(job).map_err(Failure::Config)?;
    let out = OutDir::create(&cli.out, cli.png).map_err(Failure::Compute)?;
    out.stamp(name, job).map_err(Failure::Compute)?;
    Ok(out)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli.config.as_deref();
    let load_err = Failure::Config;
    match &cli.command {
        Command::Render(args) => {
            let mut job: RenderConfig = load(path).map_err(load_err)?;
            set(&mut job.degree, args.degree);
            set(&mut job.c, args.c);
            set(&mut job.resolution, args.resolution);
            set(&mut job.cap, args.cap);
            job.center = args.center.or(job.center);
            job.half_width = args.half_width.or(job.half_width);
            job.style = args.style.or(job.style);
            let job = job.resolve(args.kind);
            let out = prepare(cli, "render", &job, RenderConfig::validate)?;
            commands::render(args.kind, &job, &out)
        }
        Command::Similarity(args) => {
            let mut job: SimilarityJob = load(path).map_err(load_err)?;
            set(&mut job.degree, args.degree);
            set(&mut job.c0, args.c0);
            set(&mut job.r, args.r);
            set(&mut job.resolution, args.resolution);
            set(&mut job.k_min, args.k_min);
            set(&mut job.k_max, args.k_max);
            set(&mut job.cap, args.cap);
            job.half_width = args.half_width.or(job.half_width);
            job.model_depth = args.model_depth.or(job.model_depth);
            if args.no_panels {
                job.panels = false;
            }
            let out = prepare(cli, "similarity", &job, SimilarityJob::validate)?;
            commands::similarity(&job, &out)
        }
        Command::Census(args) => {
            let mut job: CensusJob = load(path).map_err(load_err)?;
            set(&mut job.degree, args.degree);
            set(&mut job.mode, args.mode);
            set(&mut job.target, args.target);
            set(&mut job.period, args.period);
            set(&mut job.preperiod, args.preperiod);
            set(&mut job.first, args.first);
            set(&mut job.max_index, args.max_index);
            let out = prepare(cli, "census", &job, CensusJob::validate)?;
            commands::census(&job, &out)
        }
        Command::Conical(args) => {
            let mut job: ConicalJob = load(path).map_err(load_err)?;
            set(&mut job.degree, args.degree);
            set(&mut job.c, args.c);
            set(&mut job.z0, args.z0);
            set(&mut job.tests, args.tests.clone());
            set(&mut job.r, args.r);
            set(&mut job.d_bound, args.d_bound);
            set(&mut job.n_max, args.n_max);
            set(&mut job.radii, args.radii.clone());
            let out = prepare(cli, "conical", &job, ConicalJob::validate)?;
            commands::conical(&job, &out)
        }
        Command::Poincare(args) => {
            let mut job: PoincareJob = load(path).map_err(load_err)?;
            set(&mut job.degree, args.degree);
            set(&mut job.c, args.c);
            set(&mut job.period, args.period);
            set(&mut job.seed, args.seed);
            set(&mut job.radius, args.radius);
            let out = prepare(cli, "poincare", &job, PoincareJob::validate)?;
            commands::poincare(&job, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0
            || rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .is_err()
        {
            eprintln!("error: --threads must be a positive integer");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (Failure::Config(err) | Failure::Compute(err)) = &failure;
            let kind = if failure.code() == 2 {
                "configuration error"
            } else {
                "error"
            };
            eprintln!("{kind}: {err:#}");
            ExitCode::from(failure.code())
        }
    }
}
