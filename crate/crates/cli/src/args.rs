use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "optqrm",
    version,
    about = "Forecast option prices by quasi-reversibility and backtest the trading rules on simulated markets"
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Seed of the simulated stock path (or of the study noise).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// More progress output on stderr; repeat for more.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    /// Only errors on stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a stock path and its option quotes and write them as CSV.
    Simulate(SimulateArgs),
    /// Black-Scholes price, delta and gamma, and the one-trade win probability.
    Price(PriceArgs),
    /// Forecast one window of a quote series and dump the solution grid.
    SolveWindow(SolveWindowArgs),
    /// Forecast and score every window of one quote series.
    Backtest(BacktestArgs),
    /// Backtest a grid of implied volatilities on one simulated path.
    Sweep(SweepArgs),
    /// Error of regularised solutions against noise level on a known solution.
    Study(StudyArgs),
}

#[derive(Debug, Args, Default)]
pub struct MarketArgs {
    /// True stock volatility.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Number of simulated trading days.
    #[arg(long)]
    pub days: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    /// Regularisation parameter.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Grid cells as `nx:nt`.
    #[arg(long, value_name = "NX:NT")]
    pub grid: Option<String>,
    /// none, jacobi or cholesky.
    #[arg(long)]
    pub preconditioner: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Implied volatility the option is quoted with.
    #[arg(long)]
    pub sigma_hat: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    /// Stock price.
    #[arg(long, default_value_t = 100.0)]
    pub s: f64,
    /// Time to maturity in trading years.
    #[arg(long, default_value_t = 90.0 / 255.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 100.0)]
    pub strike: f64,
    #[arg(long, default_value_t = 0.2)]
    pub sigma_hat: f64,
    /// True volatility, for the win probability.
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    /// Holding period in trading years.
    #[arg(long, default_value_t = 1.0 / 255.0)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct SolveWindowArgs {
    /// Quote series CSV.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Day index of "today"; needs two days before it.
    #[arg(long)]
    pub day: usize,
    /// Volatility of the solve; defaults to the series' implied volatility.
    #[arg(long)]
    pub sigma_hat: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Quote series CSV; a path is simulated when absent.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Implied volatility of simulated quotes and of the solve.
    #[arg(long)]
    pub sigma_hat: Option<f64>,
    #[arg(long)]
    pub windows: Option<usize>,
    /// Trading threshold.
    #[arg(long)]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Implied volatilities as `lo:hi:step`.
    #[arg(long, value_name = "LO:HI:STEP")]
    pub sigma_hat_grid: Option<String>,
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Comma-separated noise levels; 0 adds the noiseless baseline.
    #[arg(long, value_name = "D1,D2,..")]
    pub delta_grid: Option<String>,
    /// Width of the excluded final time layer.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_name = "NX:NT")]
    pub grid: Option<String>,
}
