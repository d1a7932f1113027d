pub mod benchmark;
pub mod cluster;
pub mod simulate;

use std::collections::BTreeMap;
use std::path::Path;

use hetanm::clustering::{gibbs_run, ClusterConfig};
use hetanm::datasets::{load_pair_file, DataPair};
use hetanm::direction_test::DirectionTestConfig;
use hetanm::latent_anm::LatentConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::args::ModelArgs;
use crate::error::{CliError, CliResult};

/// Outcome of a command before it is wrapped into a report.
pub struct Outcome {
    pub config: serde_json::Value,
    pub seed: u64,
    pub results: serde_json::Value,
    /// Human-readable lines for the terminal.
    pub summary: String,
}

/// SplitMix64 finaliser over a combined seed.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Model settings shared by test, cluster and benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub lambda: f64,
    pub beta: f64,
    pub k_center: usize,
    pub k_delta: usize,
    pub seed: u64,
}

impl From<&ModelArgs> for ModelConfig {
    fn from(a: &ModelArgs) -> Self {
        Self { lambda: a.lambda, beta: a.beta, k_center: a.k_center, k_delta: a.k_delta, seed: a.seed }
    }
}

impl ModelConfig {
    pub fn latent(&self, seed: u64) -> LatentConfig<f64> {
        LatentConfig { lambda: self.lambda, beta: self.beta, seed, ..LatentConfig::default() }
    }

    pub fn cluster(&self, seed: u64) -> ClusterConfig<f64> {
        ClusterConfig { k_center: self.k_center, k_delta: self.k_delta, seed, ..ClusterConfig::default() }
    }

    pub fn direction(&self, alpha: f64, fixed_k: Option<usize>, seed: u64) -> DirectionTestConfig<f64> {
        DirectionTestConfig { latent: self.latent(seed), cluster: self.cluster(seed), alpha, fixed_k }
    }

    pub fn validate(&self, alpha: f64, fixed_k: Option<usize>) -> CliResult<()> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {alpha}")));
        }
        if self.k_delta >= self.k_center {
            return Err(CliError::Usage(format!("--k-delta ({}) must be smaller than --k-center ({})", self.k_delta, self.k_center)));
        }
        self.direction(alpha, fixed_k, self.seed).validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsSettings {
    pub sweeps: usize,
    pub burn_in: usize,
}

impl GibbsSettings {
    pub fn from_args(a: &crate::args::GibbsArgs) -> CliResult<Option<Self>> {
        if !a.gibbs {
            return Ok(None);
        }
        if a.sweeps <= a.burn_in {
            return Err(CliError::Usage(format!("--sweeps ({}) must exceed --burn-in ({})", a.sweeps, a.burn_in)));
        }
        Ok(Some(Self { sweeps: a.sweeps, burn_in: a.burn_in }))
    }
}

/// Posterior frequencies from a Gibbs run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSummary {
    pub samples: usize,
    pub k_frequencies: BTreeMap<usize, f64>,
    /// Partition frequencies keyed by canonical labels; only for n ≤ 12.
    pub partition_frequencies: Option<BTreeMap<String, f64>>,
}

const MAX_PARTITION_REPORT_N: usize = 12;

/// Relabels clusters in order of first appearance, e.g. `[2,2,0]` → `"0 0 1"`.
pub fn canonical_partition(labels: &[usize]) -> String {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            map.entry(*l).or_insert(next).to_string()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn gibbs_summary(theta: &[f64], cluster: &ClusterConfig<f64>, settings: GibbsSettings, seed: u64) -> CliResult<GibbsSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6962_6273));
    let samples = gibbs_run(theta, cluster, settings.sweeps, settings.burn_in, &mut rng)?;
    let total = samples.len() as f64;
    let mut k_frequencies = BTreeMap::new();
    let mut partitions = BTreeMap::new();
    for s in &samples {
        *k_frequencies.entry(s.k).or_insert(0.0) += 1.0 / total;
        if theta.len() <= MAX_PARTITION_REPORT_N {
            *partitions.entry(canonical_partition(&s.labels)).or_insert(0.0) += 1.0 / total;
        }
    }
    let partition_frequencies = (theta.len() <= MAX_PARTITION_REPORT_N).then_some(partitions);
    Ok(GibbsSummary { samples: samples.len(), k_frequencies, partition_frequencies })
}

pub fn load_pair(path: &Path) -> CliResult<DataPair<f64>> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("pair file not found: {}", path.display())));
    }
    Ok(load_pair_file(path)?)
}

pub fn required<T: Clone>(v: &Option<T>, flag: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::Usage(format!("{flag} is required (or pass --config)")))
}
