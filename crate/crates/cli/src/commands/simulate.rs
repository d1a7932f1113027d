use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hetanm::datasets::{
    format_labels, marginal_correlation_test, simulate_gaussian_mixture_grid, simulate_mixture_anm, within_cluster_correlation_test,
    write_pair_file, DataPair, SimSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mix_seed, Outcome};
use crate::args::{Scenario, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::report::load_config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum SimulateConfig {
    GaussianGrid {
        seed: u64,
        k_max: usize,
        n_per: usize,
        reps: usize,
        alpha: f64,
    },
    ThreeRegime {
        seed: u64,
        n: usize,
    },
    /// The resolved spec, weights already normalised.
    Spec {
        spec: SimSpec<f64>,
    },
}

impl SimulateConfig {
    pub fn seed(&self) -> u64 {
        match self {
            SimulateConfig::GaussianGrid { seed, .. } | SimulateConfig::ThreeRegime { seed, .. } => *seed,
            SimulateConfig::Spec { spec } => spec.seed,
        }
    }
}

/// Type-I error of both correlation tests at one number of clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeOneRow {
    pub k: usize,
    pub reps: usize,
    pub marginal_type1: f64,
    pub within_type1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source_id: String,
    pub n: usize,
    pub regime_counts: Vec<usize>,
    pub weights_normalized: bool,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimulateResults {
    Table { rows: Vec<TypeOneRow> },
    Dataset(DatasetSummary),
}

pub fn resolve(args: &SimulateArgs) -> CliResult<SimulateConfig> {
    let config = match &args.config {
        Some(path) => load_config(path, "simulate")?,
        None => match args.scenario {
            None => return Err(CliError::Usage("a scenario is required: gaussian-grid, three-regime or spec".into())),
            Some(Scenario::GaussianGrid) => SimulateConfig::GaussianGrid {
                seed: args.seed.unwrap_or(0),
                k_max: args.k_max,
                n_per: args.n_per,
                reps: args.reps,
                alpha: args.alpha,
            },
            Some(Scenario::ThreeRegime) => SimulateConfig::ThreeRegime { seed: args.seed.unwrap_or(0), n: args.n },
            Some(Scenario::Spec) => {
                let path =
                    args.spec_file.as_ref().ok_or_else(|| CliError::Usage("--spec-file is required for the spec scenario".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                let mut spec: SimSpec<f64> =
                    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", path.display())))?;
                if let Some(seed) = args.seed {
                    spec.seed = seed;
                }
                SimulateConfig::Spec { spec }
            }
        },
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &SimulateConfig) -> CliResult<()> {
    match config {
        SimulateConfig::GaussianGrid { k_max, n_per, reps, alpha, .. } => {
            if !(1..=8).contains(k_max) {
                return Err(CliError::Usage(format!("--k-max must lie in 1..=8, got {k_max}")));
            }
            if *n_per < 10 {
                return Err(CliError::Usage(format!("--n-per must be at least 10, got {n_per}")));
            }
            if *reps == 0 {
                return Err(CliError::Usage("--reps must be positive".into()));
            }
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {alpha}")));
            }
        }
        SimulateConfig::ThreeRegime { n, .. } if *n < 10 => return Err(CliError::Usage(format!("--n must be at least 10, got {n}"))),
        SimulateConfig::ThreeRegime { .. } => {}
        SimulateConfig::Spec { spec } => {
            let mut normalized = spec.clone();
            normalized.normalize_weights();
            normalized.validate().map_err(|e| CliError::Usage(format!("invalid spec: {e}")))?;
        }
    }
    Ok(())
}

/// Where the labels of a generated pair file are written.
pub fn labels_path(data: &Path) -> PathBuf {
    data.with_extension("labels")
}

fn write_dataset(pair: &DataPair<f64>, data: &Path) -> CliResult<()> {
    write_pair_file(pair, data)?;
    if let Some(labels) = &pair.true_labels {
        std::fs::write(labels_path(data), format_labels(labels))?;
    }
    Ok(())
}

/// Rejection rates of the marginal and within-cluster correlation tests
/// for k = 1..=k_max, each over `reps` independent grids.
pub fn gaussian_grid_table(seed: u64, k_max: usize, n_per: usize, reps: usize, alpha: f64) -> CliResult<Vec<TypeOneRow>> {
    (1..=k_max)
        .map(|k| {
            let rejections = (0..reps)
                .into_par_iter()
                .map(|rep| -> CliResult<(bool, bool)> {
                    let pair = simulate_gaussian_mixture_grid::<f64>(k, n_per, mix_seed(mix_seed(seed, k as u64), rep as u64))?;
                    Ok((marginal_correlation_test(&pair, alpha)?.reject, within_cluster_correlation_test(&pair, alpha)?.reject))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let frac = |f: fn(&(bool, bool)) -> bool| rejections.iter().filter(|r| f(r)).count() as f64 / reps as f64;
            Ok(TypeOneRow { k, reps, marginal_type1: frac(|r| r.0), within_type1: frac(|r| r.1) })
        })
        .collect()
}

fn dataset_summary(pair: DataPair<f64>, regimes: usize, weights_normalized: bool) -> DatasetSummary {
    let labels = pair.true_labels.unwrap_or_default();
    let mut regime_counts = vec![0; regimes];
    for &c in &labels {
        regime_counts[c] += 1;
    }
    DatasetSummary { source_id: pair.source_id, n: pair.x.len(), regime_counts, weights_normalized, x: pair.x, y: pair.y, labels }
}

/// Runs the scenario; `data` and `table` are output locations only.
pub fn execute(config: &SimulateConfig, data: Option<&Path>, table: Option<&Path>) -> CliResult<Outcome> {
    let mut summary = String::new();
    let results = match config {
        SimulateConfig::GaussianGrid { seed, k_max, n_per, reps, alpha } => {
            let rows = gaussian_grid_table(*seed, *k_max, *n_per, *reps, *alpha)?;
            if let Some(path) = table {
                let mut w = csv::Writer::from_path(path)?;
                for r in &rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            if let Some(path) = data {
                write_dataset(&simulate_gaussian_mixture_grid(*k_max, *n_per, mix_seed(*seed, *k_max as u64))?, path)?;
            }
            let _ = writeln!(summary, "{:>3} {:>10} {:>10}", "k", "marginal", "within");
            for r in &rows {
                let _ = writeln!(summary, "{:>3} {:>10.4} {:>10.4}", r.k, r.marginal_type1, r.within_type1);
            }
            SimulateResults::Table { rows }
        }
        SimulateConfig::ThreeRegime { seed, n } => {
            let spec = SimSpec::<f64>::three_regime(*n, *seed);
            let pair = simulate_mixture_anm(&spec)?;
            SimulateResults::Dataset(finish_dataset(pair, spec.regimes.len(), false, data, &mut summary)?)
        }
        SimulateConfig::Spec { spec } => {
            let mut spec = spec.clone();
            let normalized = spec.normalize_weights();
            if normalized {
                log::warn!("regime weights do not sum to one; normalising them");
            }
            let pair = simulate_mixture_anm(&spec)?;
            SimulateResults::Dataset(finish_dataset(pair, spec.regimes.len(), normalized, data, &mut summary)?)
        }
    };
    Ok(Outcome { config: serde_json::to_value(config)?, seed: config.seed(), results: serde_json::to_value(&results)?, summary })
}

fn finish_dataset(
    pair: DataPair<f64>,
    regimes: usize,
    normalized: bool,
    data: Option<&Path>,
    summary: &mut String,
) -> CliResult<DatasetSummary> {
    match data {
        Some(path) => {
            write_dataset(&pair, path)?;
            let _ = writeln!(summary, "wrote {} rows to {} (labels in {})", pair.len(), path.display(), labels_path(path).display());
        }
        None => log::warn!("no --data path given; the dataset is only stored in the report"),
    }
    let s = dataset_summary(pair, regimes, normalized);
    let _ = writeln!(summary, "{}: regime counts {:?}", s.source_id, s.regime_counts);
    Ok(s)
}
