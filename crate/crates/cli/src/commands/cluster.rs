use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hetanm::clustering::fit_clusters;
use hetanm::latent_anm::fit_latent_params;
use serde::{Deserialize, Serialize};

use super::{gibbs_summary, load_pair, GibbsSettings, GibbsSummary, ModelConfig, Outcome};
use crate::args::ClusterArgs;
use crate::error::{CliError, CliResult};
use crate::report::load_config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterInput {
    /// Latent values given directly, one per line.
    Theta(PathBuf),
    /// Latent values fitted for the x -> y direction of a pair.
    Pair(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCmdConfig {
    pub input: ClusterInput,
    #[serde(flatten)]
    pub model: ModelConfig,
    pub gibbs: Option<GibbsSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResults {
    pub n: usize,
    pub k: usize,
    pub score: f64,
    pub per_k_scores: BTreeMap<usize, f64>,
    pub centers: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub sigma2: f64,
    pub tau2: f64,
    pub labels: Vec<usize>,
    /// The fitted latent values when the input was a pair.
    pub theta: Option<Vec<f64>>,
    pub gibbs: Option<GibbsSummary>,
}

pub fn resolve(args: &ClusterArgs) -> CliResult<ClusterCmdConfig> {
    let config = match &args.config {
        Some(path) => load_config(path, "cluster")?,
        None => {
            let input = match (&args.theta, &args.pair) {
                (Some(t), None) => ClusterInput::Theta(t.clone()),
                (None, Some(p)) => ClusterInput::Pair(p.clone()),
                _ => return Err(CliError::Usage("exactly one of --theta or --pair is required (or pass --config)".into())),
            };
            ClusterCmdConfig { input, model: ModelConfig::from(&args.model), gibbs: GibbsSettings::from_args(&args.gibbs)? }
        }
    };
    config.model.validate(0.05, None)?;
    Ok(config)
}

/// Reads whitespace-separated latent values.
pub fn read_theta(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{}:{}: not a finite number: {tok:?}", path.display(), line_no + 1)))?;
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{} contains no values", path.display())));
    }
    Ok(out)
}

pub fn execute(config: &ClusterCmdConfig) -> CliResult<Outcome> {
    let seed = config.model.seed;
    let (theta, fitted) = match &config.input {
        ClusterInput::Theta(path) => (read_theta(path)?, false),
        ClusterInput::Pair(path) => {
            let pair = load_pair(path)?;
            (fit_latent_params(&pair.x, &pair.y, &config.model.latent(seed))?.theta, true)
        }
    };
    let cc = config.model.cluster(seed);
    let model = fit_clusters(&theta, &cc)?;
    let gibbs = config.gibbs.map(|g| gibbs_summary(&theta, &cc, g, seed)).transpose()?;
    let results = ClusterResults {
        n: theta.len(),
        k: model.k,
        score: model.score,
        cluster_sizes: model.cluster_sizes(),
        per_k_scores: model.per_k_scores,
        centers: model.centers,
        sigma2: model.sigma2,
        tau2: model.tau2,
        labels: model.labels,
        theta: fitted.then_some(theta),
        gibbs,
    };
    let mut summary = format!("k = {} (score {:.4}, n = {})\n", results.k, results.score, results.n);
    for (k, s) in &results.per_k_scores {
        let _ = writeln!(summary, "  k = {k}: {s:.4}");
    }
    let _ = writeln!(summary, "  sizes: {:?}", results.cluster_sizes);
    if let Some(g) = &results.gibbs {
        let freqs: Vec<String> = g.k_frequencies.iter().map(|(k, f)| format!("{k}: {f:.3}")).collect();
        let _ = writeln!(summary, "  posterior k: {}", freqs.join(", "));
    }
    Ok(Outcome { config: serde_json::to_value(config)?, seed, results: serde_json::to_value(&results)?, summary })
}
