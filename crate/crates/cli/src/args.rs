use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hetanm", version, about = "Cluster-adjusted causal direction tests for heterogeneous data")]
pub struct Cli {
    /// Worker threads; defaults to the available cores. Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test both causal directions of one cause-effect pair.
    Test(TestArgs),
    /// Cluster latent parameters and choose the number of clusters.
    Cluster(ClusterArgs),
    /// Type-I error study over a directory of pairs.
    Benchmark(BenchmarkArgs),
    /// Generate synthetic data and correlation studies.
    Simulate(SimulateArgs),
}

/// Options shared by every command that fits and clusters latent parameters.
#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// Weight of the HSIC penalty in the latent fit.
    #[arg(long, default_value_t = 50.0)]
    pub lambda: f64,
    /// GP noise precision.
    #[arg(long, default_value_t = 100.0)]
    pub beta: f64,
    /// Centre K of the candidate range for the number of clusters.
    #[arg(long, default_value_t = 4)]
    pub k_center: usize,
    /// Half-width Δ of the candidate range K−Δ..=K+Δ.
    #[arg(long, default_value_t = 2)]
    pub k_delta: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    /// Also run the Gibbs sampler and report posterior frequencies.
    #[arg(long)]
    pub gibbs: bool,
    #[arg(long, default_value_t = 20_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Whitespace-separated pair file (first column x, second y).
    #[arg(long)]
    pub pair: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replay a configuration file or an earlier report; other model flags are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Use exactly this many clusters; 1 gives the unadjusted test.
    #[arg(long)]
    pub fixed_k: Option<usize>,
    #[arg(long, value_enum, default_value_t = RuleArg::Asymmetry)]
    pub rule: RuleArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub gibbs: GibbsArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    /// Prefer the direction whose test alone does not reject.
    Asymmetry,
    /// Prefer the direction with the larger p-value.
    PValue,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// File with one latent value per line.
    #[arg(long, conflicts_with = "pair")]
    pub theta: Option<PathBuf>,
    /// Pair file; latent values are fitted for the x -> y direction first.
    #[arg(long)]
    pub pair: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub gibbs: GibbsArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Directory of pair files (`<pair_id>.txt`).
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// CSV with columns pair_id,true_direction[,excluded]; defaults to `<dir>/manifest.csv`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Rows drawn without replacement per replication.
    #[arg(long, default_value_t = 90)]
    pub subsample: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Keep the pairs excluded by default (12, 17, 47, 52-55, 68, 70, 71, 73, 101, 105, 106).
    #[arg(long)]
    pub no_default_exclusions: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-pair summary table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// One row per replication, direction and variant.
    #[arg(long)]
    pub reps_csv: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Standard Gaussians centred along y = x; correlation type-I study.
    GaussianGrid,
    /// Three regimes y = x³, 0.5x and 0.8 − x³ plus noise.
    ThreeRegime,
    /// A mixture described by a JSON spec file.
    Spec,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub scenario: Option<Scenario>,
    /// Defaults to 0, or to the spec file's seed for the spec scenario.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample size for three-regime.
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub k_max: usize,
    #[arg(long, default_value_t = 100)]
    pub n_per: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// JSON mixture description for the spec scenario.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Generated pair file; labels go to a `.labels` sidecar next to it.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Type-I error table (gaussian-grid).
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
