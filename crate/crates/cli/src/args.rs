use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

const UNITS: &str = "Units: rates are events per second per side, times are seconds of model time, \
queue sizes are counts of batches (orders of the typical size), prices are currency units and the \
tick is the currency value of one price step.";

#[derive(Debug, Parser)]
#[command(
    name = "lobq",
    version,
    about = "Two-queue Markovian limit order book: analytics, simulation, estimation and cross-validation",
    after_help = UNITS
)]
pub struct Cli {
    /// JSON or TOML file of default flag values (keys are flag names with `_` for `-`); flags on the
    /// command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,

    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Human-readable table (xval only).
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Survival function P[tau > t] of the time to the next price change, with its power-law tail.
    #[command(after_help = UNITS, allow_negative_numbers = true)]
    Duration(DurationArgs),
    /// Probability that the next price move is up, on a grid of bid and ask queue sizes.
    #[command(name = "prob-up", after_help = UNITS, allow_negative_numbers = true)]
    ProbUp(ProbUpArgs),
    /// Statistics of the price-move sequence: p_cont, p_n, autocovariances and depth.
    #[command(name = "price-stats", after_help = UNITS, allow_negative_numbers = true)]
    PriceStats(PriceStatsArgs),
    /// Simulate one price path (and optionally its event log).
    #[command(after_help = UNITS, allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Estimate order flow rates and the replenishment law from an event log.
    #[command(after_help = UNITS, allow_negative_numbers = true)]
    Estimate(EstimateArgs),
    /// Diffusion-limit volatility from order flow, optionally against a log's realized volatility.
    #[command(after_help = UNITS, allow_negative_numbers = true)]
    Vol(VolArgs),
    /// Run the cross-validation suite; exit status 3 if any comparison fails.
    #[command(after_help = UNITS, allow_negative_numbers = true)]
    Xval(XvalArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Limit order arrival rate per side (orders per second).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Market order rate per side (orders per second).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Cancellation rate per side (orders per second).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Combined removal rate mu+theta per side (orders per second); split evenly when mu and theta
    /// are not given.
    #[arg(long)]
    pub mu_theta: Option<f64>,
    /// Tick size (currency units) [default: 0.01].
    #[arg(long)]
    pub tick: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DistArgs {
    /// Replenishment law after an up-move as `bid:ask:weight,...` (queue sizes in batches; weights are
    /// normalized). The law after a down-move is its mirror.
    #[arg(long)]
    pub f: Option<String>,
    /// Replenishment law as an `i,j,p` CSV file.
    #[arg(long, value_name = "FILE")]
    pub f_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DurationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Bid queue size (batches).
    #[arg(long)]
    pub bid: Option<u32>,
    /// Ask queue size (batches).
    #[arg(long)]
    pub ask: Option<u32>,
    /// Times in seconds: `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<String>,
    /// Also report the expected duration in seconds (needs mu+theta > lambda).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mean: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ProbUpArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Largest bid and ask queue size on the grid (batches) [default: 20].
    #[arg(long)]
    pub max_queue: Option<u32>,
    /// Grid truncation for unbalanced flow (batches) [default: 400].
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PriceStatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    /// Initial bid queue for p_n (batches).
    #[arg(long)]
    pub bid: Option<u32>,
    /// Initial ask queue for p_n (batches).
    #[arg(long)]
    pub ask: Option<u32>,
    /// Largest autocovariance lag and move index n [default: 5].
    #[arg(long)]
    pub lags: Option<u32>,
    /// Grid truncation for unbalanced flow (batches) [default: 400].
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    /// JSON or TOML simulation config (`seed`, `horizon`, `initial_state`); flags override it.
    #[arg(long, value_name = "FILE")]
    pub sim_config: Option<PathBuf>,
    /// RNG seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop at this model time (seconds).
    #[arg(long)]
    pub time: Option<f64>,
    /// Stop after this many order book events.
    #[arg(long)]
    pub events: Option<u64>,
    /// Stop after this many price changes.
    #[arg(long)]
    pub moves: Option<u64>,
    /// Initial queues `bid,ask` (batches); drawn from f when absent.
    #[arg(long)]
    pub start: Option<String>,
    /// Also write the event log (CSV) to this file.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    /// Event log CSV, optionally gzip-compressed.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Shares per batch; raw queue sizes are divided by it and rounded [default: 1].
    #[arg(long)]
    pub batch_size: Option<u32>,
    /// Start of the estimation window (seconds, log clock).
    #[arg(long, allow_hyphen_values = true)]
    pub window_start: Option<f64>,
    /// End of the estimation window (seconds, log clock).
    #[arg(long, allow_hyphen_values = true)]
    pub window_end: Option<f64>,
    /// Tick size (currency units); inferred from the smallest price change when absent.
    #[arg(long)]
    pub tick: Option<f64>,
    /// Pool mirrored down-move snapshots into f-hat [default: true].
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pool_down_moves: Option<bool>,
    /// Write f-hat as an `i,j,p` CSV to this file.
    #[arg(long, value_name = "FILE")]
    pub f_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct VolArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    /// Observation window (seconds) for the standard deviation of price changes.
    #[arg(long)]
    pub window: Option<f64>,
    /// Event log to compare predicted and realized volatility (needs --window).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Shares per batch for the log [default: 1].
    #[arg(long)]
    pub batch_size: Option<u32>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct XvalArgs {
    /// Base seed of the Monte Carlo comparisons.
    #[arg(long)]
    pub seed: Option<u64>,
    /// About 1% of the Monte Carlo work; a smoke test, some checks will fail.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub quick: Option<bool>,
    /// Comma-separated criteria to run [default: 1,2,3,4,5,6,7,8].
    #[arg(long)]
    pub criteria: Option<String>,
}
