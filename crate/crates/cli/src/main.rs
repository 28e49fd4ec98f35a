use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fastlpr_cli::bench::{self, BandwidthRule, BenchConfig, Engine};
use fastlpr_cli::error::CliError;
use fastlpr_cli::fit::{self, DensityFactorArg, FitConfig, FitMode};

#[derive(Parser)]
#[command(
    name = "fastlpr",
    version,
    about = "Exact local polynomial regression and density estimation with near-linear preprocessing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit estimates for a batch of test points from CSV files.
    Fit(FitArgs),
    /// Time the tree-backed engine against the naive scan on synthetic data.
    #[command(after_help = "\
Synthetic data: coordinates are uniform on the unit cube [0,1]^d; responses
are m0(x) = sin(2*pi*x1) * prod_{j>=2} cos(2*pi*x_j) plus Gaussian noise with
sigma = 0.1. Each (n, s) cell reuses the same data for every engine.")]
    Bench(BenchArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Training CSV with header x1..xd and, for regression, a final y column
    #[arg(long)]
    train: PathBuf,
    /// Test CSV with header x1..xd and optionally a final h column
    #[arg(long)]
    test: PathBuf,
    /// Polynomial degree k
    #[arg(long)]
    degree: usize,
    /// Global bandwidth; omit when the test file carries an h column
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, value_enum)]
    mode: FitMode,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Engine::Fast)]
    engine: Engine,
    /// Skip the mean pre-translation of coordinates at ingest
    #[arg(long)]
    no_recenter: bool,
    /// Scale applied to the density readout
    #[arg(long, value_enum, default_value_t = DensityFactorArg::Taylor)]
    density_factor: DensityFactorArg,
    /// CSV of anticipated points (header x1..xd) reserved in the rank space
    /// so they can be inserted later
    #[arg(long)]
    reserve: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Dimension of the synthetic data
    #[arg(long)]
    d: usize,
    /// Polynomial degree k
    #[arg(long)]
    k: usize,
    /// Training sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    /// Testing sizes, comma separated
    #[arg(long, value_delimiter = ',')]
    s_list: Vec<usize>,
    /// One of n^-1/3, n^-1/4, n^-1/5, or a constant like fixed:0.25
    #[arg(long)]
    bandwidth_rule: BandwidthRule,
    /// Engines to run, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Engine::Fast, Engine::Naive])]
    engines: Vec<Engine>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Skip naive cells with n*s above this bound
    #[arg(long, default_value_t = 2_000_000_000)]
    naive_max_cells: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => fit::run(&FitConfig {
            train: args.train,
            test: args.test,
            degree: args.degree,
            bandwidth: args.bandwidth,
            mode: args.mode,
            out: args.out,
            engine: args.engine,
            recenter: !args.no_recenter,
            density_factor: args.density_factor,
            reserve: args.reserve,
        }),
        Command::Bench(args) => {
            let rows = bench::run(&BenchConfig {
                dim: args.d,
                degree: args.k,
                n_list: args.n_list,
                s_list: args.s_list,
                rule: args.bandwidth_rule,
                engines: args.engines,
                seed: args.seed,
                naive_max_cells: args.naive_max_cells,
            })?;
            bench::write_rows(&args.out, &rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
