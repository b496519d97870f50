//! `polyharm` command-line front end.
//!
//! Every command reads one JSON input file, writes a JSON report (to
//! `--output` or stdout) and, where it makes sense, CSV data next to it.
//! Exit status: 0 decisive / PASS, 1 error / FAIL, 2 inconclusive.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::report::Outcome;

#[derive(Parser, Debug)]
#[command(name = "polyharm", version, about = "Liouville classification and supersolution certification for polyharmonic Choquard-type inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Parameter file (JSON).
    #[arg(long, short, global = true)]
    input: Option<PathBuf>,

    /// Report path; stdout when omitted. CSV data goes next to it.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true)]
    grid_min: Option<f64>,

    #[arg(long, global = true)]
    grid_max: Option<f64>,

    #[arg(long, global = true)]
    grid_points: Option<usize>,

    /// Tolerance; the meaning depends on the command.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for the off-grid spot checks of `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Eq)]
enum Command {
    /// Classify a single inequality.
    Classify,
    /// Classify a coupled system on a graph.
    ClassifySystem,
    /// Build an explicit supersolution (JSON + profile CSV).
    Construct,
    /// Check a construction pointwise on a radial grid.
    Verify {
        /// CSV profile written by `construct`, checked against the JSON.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Number of extra random radii between grid points.
        #[arg(long, default_value_t = 0)]
        spot_checks: usize,
    },
    /// Fit the decay rate of a Riesz potential.
    DecayFit,
    /// Existence-region boundary and verdict grid as CSV.
    RegionCsv,
    /// Iterated Newtonian potentials of a radial source.
    Potential,
    /// Poly-superharmonicity and cutoff-integral diagnostics.
    BarrierReport,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::ClassifySystem => "classify-system",
            Command::Construct => "construct",
            Command::Verify { .. } => "verify",
            Command::DecayFit => "decay-fit",
            Command::RegionCsv => "region-csv",
            Command::Potential => "potential",
            Command::BarrierReport => "barrier-report",
        }
    }
}

fn init_threads() -> anyhow::Result<Option<usize>> {
    let Ok(raw) = std::env::var("POLYHARM_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().map_err(|_| anyhow::anyhow!("POLYHARM_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        anyhow::bail!("POLYHARM_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(Some(n))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|threads| commands::run(&cli, threads));
    match result {
        Ok(Outcome::Decisive) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Ok(Outcome::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
