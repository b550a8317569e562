use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use mcs_core::harness::{check_report, run_study, StudyConfig, StudyKind};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Refinement studies for the mass-conserving mixed-stress Stokes discretization on the unit square or cube.
#[derive(Parser, Debug)]
#[command(name = "mcs", version)]
struct Args {
    /// Spatial dimension.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    dim: u8,
    /// Polynomial order k.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Subdivisions per edge, one mesh per entry.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    levels: Vec<usize>,
    /// Viscosity.
    #[arg(long, default_value_t = 1e-3)]
    nu: f64,
    #[arg(long, value_enum, default_value_t = StudyKind::Convergence)]
    study: StudyKind,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Volume quadrature exactness used in assembly.
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Exit with a nonzero code when a threshold is violated.
    #[arg(long)]
    check: bool,
}

fn run(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global()?;
    let mut config = StudyConfig::new(args.dim as usize, args.order, args.levels, args.study);
    config.nu = args.nu;
    config.quad_degree = args.quad_degree;
    let report = run_study(&config)?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json()? + "\n",
    };
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    if !args.check {
        return Ok(true);
    }
    let checks = check_report(&report);
    for c in &checks {
        eprintln!("{} {:<40} {:>12.4e}  ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
