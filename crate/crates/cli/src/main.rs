use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "lrqaoa", version, about = "Linear-ramp QAOA simulator and benchmark harness")]
pub struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate problem instances.
    Generate(GenerateArgs),
    /// Simulate one instance at one schedule.
    Run(RunArgs),
    /// Success probability over a grid of ramp slopes.
    Scan(ScanArgs),
    /// Noisy simulation over depths and error rates.
    NoiseSim(NoiseSimArgs),
    /// Fit the exponential noise model to noise-sim output.
    FitNoise(FitNoiseArgs),
    /// Classical baseline solver on one instance.
    Baseline(BaselineArgs),
    /// Single-flip mitigation of a sample file.
    Mitigate(MitigateArgs),
    /// Fit success-probability scaling with problem size.
    FitScaling(FitScalingArgs),
    /// Time to solution.
    Tts(TtsArgs),
    /// TTS scaling comparison of classical solvers and linear-ramp QAOA.
    Compare(CompareArgs),
    /// Batch sweep from a JSON experiment config.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// wmaxcut, fc-wmaxcut, maxcut, maxcut-3reg, mis or max3sat.
    #[arg(long)]
    pub family: String,
    /// Variables (qubits).
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub edge_density: Option<f64>,
    #[arg(long)]
    pub clause_ratio: Option<f64>,
    /// Instances to generate, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub count: u64,
}

#[derive(Args, Debug)]
pub struct InstanceArg {
    /// Instance JSON; an `.edges` file beside it is read as the graph.
    #[arg(long)]
    pub instance: PathBuf,
    /// Explicit edge-list file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArg,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = lrqaoa::schedule::DEFAULT_DELTA_BETA)]
    pub delta_beta: f64,
    #[arg(long, default_value_t = lrqaoa::schedule::DEFAULT_DELTA_GAMMA)]
    pub delta_gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    /// Write per-layer level probabilities to trajectory.csv.
    #[arg(long)]
    pub record_trajectory: bool,
    /// Apply an X on every qubit after this many layers.
    #[arg(long)]
    pub inject_x_at: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    /// Two-qubit depolarizing rate; omit for a noiseless scan.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = Backend::DensityMatrix)]
    pub backend: Backend,
    #[arg(long, default_value_t = 1000)]
    pub trajectories: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    DensityMatrix,
    Trajectory,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub instance: InstanceArg,
    #[arg(long)]
    pub p: usize,
    /// `lo:hi:steps` for the mixer slope.
    #[arg(long, default_value = "0.1:0.6:6")]
    pub beta: String,
    /// `lo:hi:steps` for the cost slope.
    #[arg(long, default_value = "0.1:1.0:7")]
    pub gamma: String,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Args, Debug)]
pub struct NoiseSimArgs {
    #[command(flatten)]
    pub instance: InstanceArg,
    /// Comma-separated depths.
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<usize>,
    /// `delta_beta,delta_gamma`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [lrqaoa::schedule::DEFAULT_DELTA_BETA, lrqaoa::schedule::DEFAULT_DELTA_GAMMA])]
    pub deltas: Vec<f64>,
    /// Comma-separated error rates.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Backend::DensityMatrix)]
    pub backend: Backend,
    #[arg(long, default_value_t = 1000)]
    pub trajectories: usize,
}

#[derive(Args, Debug)]
pub struct FitNoiseArgs {
    /// noise-sim CSV files (N_g, lambda, p_ovl columns).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Also report the gate budget reaching this overlap.
    #[arg(long)]
    pub target: Option<f64>,
    /// Error rate for the gate budget; defaults to the fitted one.
    #[arg(long)]
    pub budget_lambda: Option<f64>,
    /// Estimate the error rate with this fixed k0 instead of fitting k0.
    #[arg(long)]
    pub k0: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Sa,
    Tabu,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clock {
    /// Measured seconds per read.
    Wall,
    /// sweeps * n * seconds-per-update.
    Updates,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub instance: InstanceArg,
    #[arg(long, value_enum)]
    pub solver: Solver,
    #[arg(long, default_value_t = 100)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 100)]
    pub reads: usize,
    #[arg(long, default_value_t = lrqaoa::baselines::DEFAULT_PD)]
    pub p_d: f64,
    #[arg(long, value_enum, default_value_t = Clock::Updates)]
    pub clock: Clock,
    #[arg(long, default_value_t = 1e-9)]
    pub seconds_per_update: f64,
}

#[derive(Args, Debug)]
pub struct MitigateArgs {
    #[command(flatten)]
    pub instance: InstanceArg,
    /// CSV with `bits` and optional `count` columns.
    #[arg(long)]
    pub samples: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    PerSizeMean,
    PerInstance,
}

#[derive(Args, Debug)]
pub struct FitScalingArgs {
    /// CSV with family, n_qubits, p, seed and success_prob columns.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = lrqaoa::metrics::DEFAULT_NQ_MIN)]
    pub n_q_min: usize,
    #[arg(long, value_enum, default_value_t = Mode::PerSizeMean)]
    pub mode: Mode,
    /// Probability column to fit.
    #[arg(long, default_value = "success_prob")]
    pub column: String,
}

#[derive(Args, Debug)]
pub struct TtsArgs {
    /// Success probability per sample.
    #[arg(long)]
    pub prob: f64,
    /// Seconds per sample.
    #[arg(long, conflicts_with_all = ["n", "p"])]
    pub time: Option<f64>,
    /// Qubits, for the QAOA shot-time model.
    #[arg(long, requires = "p")]
    pub n: Option<usize>,
    /// Depth, for the QAOA shot-time model.
    #[arg(long, requires = "n")]
    pub p: Option<usize>,
    #[arg(long, default_value_t = lrqaoa::baselines::REFERENCE_T2Q)]
    pub t2q: f64,
    #[arg(long, default_value_t = lrqaoa::baselines::DEFAULT_PD)]
    pub p_d: f64,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// JSON comparison config; overrides the size flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 12, 14, 16, 18])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 5)]
    pub hard_k: usize,
    #[arg(long, default_value_t = 100)]
    pub reads: usize,
    /// Extra solver results as `name=path.csv` (instance, n_qubits, tts).
    #[arg(long)]
    pub external: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Exit status for an error: 3 for resource caps, 2 for bad configuration,
/// 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<lrqaoa::Error>() {
            if e.is_resource_cap() {
                return 3;
            }
            if e.is_config_error() {
                return 2;
            }
        }
    }
    1
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| lrqaoa::Error::Parameter(format!("cannot read {}: {e}", path.display())))
        .with_context(|| format!("reading {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = lrqaoa::experiment::thread_pool(cli.workers)
        .map_err(anyhow::Error::from)
        .and_then(|pool| pool.install(|| commands::dispatch(&cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
