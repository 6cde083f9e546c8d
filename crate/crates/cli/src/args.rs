use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "wpsched",
    version,
    about = "Scheduling analysis and simulation for full-duplex wireless-powered IoT networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the battery chains and write one analysis row per grid point and policy.
    Analyze(AnalyzeArgs),
    /// Run the Monte Carlo simulator and write one row per grid point and policy.
    Simulate(SimulateArgs),
    /// Compare analysis and simulation within three standard errors.
    Validate(ValidateArgs),
    /// Fairness against HAP power for every policy, analysis and simulation.
    SweepPh(SweepPhArgs),
    /// Write the per-block trace of one short simulation.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    S1,
    S2,
    Equal10,
    Step7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    Rate,
    HapPower,
    NumIods,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Continuous,
    Discretized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    /// Fixed-point iteration with one chain step per sweep.
    Plain,
    /// Exact per-IoD solve after every profile refresh.
    Accelerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Both,
    Analysis,
    Simulation,
}

/// System configuration shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON configuration document (see the `config` module docs for the schema).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in placement; overrides the document's `preset`.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Number of IoDs taken from the preset.
    #[arg(long)]
    pub num_iods: Option<usize>,
    /// Desk-scale sizes: K = 50, M = 10, first three IoDs.
    #[arg(long)]
    pub scaled: bool,
    /// Flat override `key=value`; the value is read as JSON, e.g. `rate_req=1.5`
    /// or `distances=[5,9,10]`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Parameter swept over `--grid`.
    #[arg(long, value_enum, requires = "grid")]
    pub sweep: Option<SweepVar>,
    /// Comma-separated increasing grid values (W for hap-power).
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Fixed-point scheme; defaults to accelerated (same fixed point, far
    /// fewer sweeps at high HAP power).
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    /// Weight of the new iterate in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub relaxation: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    /// Stop when the l1 change between iterates falls below this.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write the convergence trace of each solve.
    #[arg(long)]
    pub convergence_trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Blocks per replication.
    #[arg(long, default_value_t = 1_000_000)]
    pub blocks: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Discretized)]
    pub mode: ModeArg,
    /// Round robin passes an empty IoD's slot to the next non-empty one.
    #[arg(long)]
    pub rr_skip_empty: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Policies to run, comma-separated (throughput, fairness, rr, rs).
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Also write the per-IoD state occupancy of each run.
    #[arg(long)]
    pub occupancy: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Override applied to the simulated system only, `key=value`. Repeatable.
    #[arg(long = "sim-set", value_name = "KEY=VALUE")]
    pub sim_overrides: Vec<String>,
    /// Allowed distance in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
}

#[derive(Debug, Args)]
pub struct SweepPhArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// HAP powers in W; defaults to 1e-3 .. 1e2 in half decades.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Source::Both)]
    pub source: Source,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub run: RunArgs,
}
