//! `homodyne` command-line front end.
//!
//! Exit status: 0 on success, 1 on a usage error (bad or missing flags),
//! 2 on a data error (unreadable or malformed input, failed computation).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homodyne::grid::GridSpec;
use homodyne::StateSpec;

use commands::{Failure, TruthKind};

#[derive(Debug, Parser)]
#[command(name = "homodyne", version, about = "Simulate homodyne records and reconstruct phase-space functions")]
struct Cli {
    /// Worker threads for the parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded dataset of lossy homodyne events.
    Simulate(SimulateArgs),
    /// Maximum-likelihood reconstruction on a grid of phase-space points.
    ReconstructMle(MleArgs),
    /// Filtered back-projection on a grid of phase-space points.
    ReconstructFbp(FbpArgs),
    /// Analytic reference values on a grid.
    Truth(TruthArgs),
    /// Outcome histogram at one local-oscillator phase.
    Histogram(HistogramArgs),
    /// Pointwise difference of two tables.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// vacuum | fock:N | coherent:RE,IM | cat:RE,IM,odd|even
    #[arg(long, allow_hyphen_values = true)]
    state: StateSpec,
    /// Detector efficiency in (0, 1].
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    phases: usize,
    #[arg(long)]
    per_phase: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct GridArgs {
    /// Line of points, `q:A:B:STEPS@p=C` or `p:A:B:STEPS@q=C`.
    #[arg(long, allow_hyphen_values = true, value_parser = GridSpec::parse_slice)]
    slice: Option<GridSpec>,
    /// Rectangular lattice, `qA:qB:qN,pA:pB:pN`.
    #[arg(long, allow_hyphen_values = true, value_parser = GridSpec::parse_lattice)]
    grid: Option<GridSpec>,
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        self.slice.clone().or_else(|| self.grid.clone()).expect("clap enforces one grid flag")
    }
}

#[derive(Debug, Args)]
struct MleArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of displaced Fock populations.
    #[arg(long, default_value_t = 40)]
    nmax: usize,
    /// EM iteration budget per point.
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Stop early once the log-likelihood gains less than this per 50 iterations.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the estimated populations at every point to this file.
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FbpArgs {
    #[arg(long)]
    data: PathBuf,
    /// Filter cutoff frequency.
    #[arg(long, default_value_t = homodyne::fbp::DEFAULT_CUTOFF)]
    cutoff: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TruthArgs {
    #[arg(long, allow_hyphen_values = true)]
    state: StateSpec,
    /// wigner | squasi:S | fbp-limit:ETA
    #[arg(long, allow_hyphen_values = true)]
    kind: TruthKind,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HistogramArgs {
    #[arg(long)]
    data: PathBuf,
    /// Local-oscillator phase to select.
    #[arg(long, allow_hyphen_values = true)]
    phase: f64,
    /// Accepted distance from `--phase`.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Histogram range `LO:HI`.
    #[arg(long, allow_hyphen_values = true, value_parser = commands::parse_range)]
    range: (f64, f64),
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {} threads: {e}", cli.threads)))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => commands::simulate(&a.state, a.eta, a.phases, a.per_phase, a.seed, &a.out),
        Command::ReconstructMle(a) => {
            let opts = commands::MleOptions { n_max: a.nmax, iters: a.iters, tol: a.tol };
            commands::reconstruct_mle(&a.data, &opts, &a.grid.spec(), &a.out, a.weights.as_deref())
        }
        Command::ReconstructFbp(a) => commands::reconstruct_fbp(&a.data, a.cutoff, &a.grid.spec(), &a.out),
        Command::Truth(a) => commands::truth(&a.state, &a.kind, &a.grid.spec(), &a.out),
        Command::Histogram(a) => commands::histogram(&a.data, a.phase, a.tol, a.bins, a.range, &a.out),
        Command::Compare(a) => commands::compare(&a.a, &a.b, &a.out),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
