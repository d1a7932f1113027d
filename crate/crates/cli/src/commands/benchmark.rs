use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hetanm::datasets::{subsample, DataPair};
use hetanm::direction_test::{test_direction, Direction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_pair, mix_seed, required, ModelConfig, Outcome};
use crate::args::BenchmarkArgs;
use crate::error::{CliError, CliResult};
use crate::report::load_config;

/// Pair numbers left out of the benchmark unless `--no-default-exclusions`.
pub const DEFAULT_EXCLUSIONS: [u32; 14] = [12, 17, 47, 52, 53, 54, 55, 68, 70, 71, 73, 101, 105, 106];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub reps: usize,
    pub subsample: usize,
    pub alpha: f64,
    pub default_exclusions: bool,
    #[serde(flatten)]
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub pair_id: String,
    pub true_direction: Direction,
    pub excluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Number of clusters estimated from the latent values.
    Adjusted,
    /// A single cluster, i.e. the homogeneous test.
    Unadjusted,
}

impl Variant {
    fn fixed_k(self) -> Option<usize> {
        match self {
            Variant::Adjusted => None,
            Variant::Unadjusted => Some(1),
        }
    }
}

/// One test on one subsample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub pair_id: String,
    pub rep: usize,
    pub seed: u64,
    pub variant: Variant,
    pub direction: Direction,
    pub causal: bool,
    pub t: Option<f64>,
    pub quantile: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: Option<bool>,
    pub k_used: Option<usize>,
    pub error: Option<String>,
}

/// Per-pair aggregate; one box of the type-I error plot per variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair_id: String,
    pub true_direction: Direction,
    pub n: usize,
    pub reps: usize,
    /// Rejection rate of the causal direction over the successful replications.
    pub type1_adjusted: Option<f64>,
    pub type1_unadjusted: Option<f64>,
    /// Rejection rate of the anticausal direction.
    pub power_adjusted: Option<f64>,
    pub power_unadjusted: Option<f64>,
    pub mean_k_adjusted: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResults {
    pub pairs: Vec<PairSummary>,
    pub excluded: Vec<String>,
    pub mean_type1_adjusted: Option<f64>,
    pub mean_type1_unadjusted: Option<f64>,
    pub replications: Vec<ReplicationRow>,
}

pub fn resolve(args: &BenchmarkArgs) -> CliResult<BenchmarkConfig> {
    let config = match &args.config {
        Some(path) => load_config(path, "benchmark")?,
        None => {
            let dir = required(&args.dir, "--dir")?;
            BenchmarkConfig {
                manifest: args.manifest.clone().unwrap_or_else(|| dir.join("manifest.csv")),
                dir,
                reps: args.reps,
                subsample: args.subsample,
                alpha: args.alpha,
                default_exclusions: !args.no_default_exclusions,
                model: ModelConfig::from(&args.model),
            }
        }
    };
    if config.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    if config.subsample < 10 {
        return Err(CliError::Usage(format!("--subsample must be at least 10, got {}", config.subsample)));
    }
    config.model.validate(config.alpha, None)?;
    Ok(config)
}

/// FNV-1a, used to give every pair its own stable seed stream.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Numeric part of a pair id, e.g. `pair0012` → 12.
fn pair_number(id: &str) -> Option<u32> {
    let digits: String = id.chars().filter(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn parse_direction(s: &str) -> Option<Direction> {
    match s.trim().to_ascii_lowercase().as_str() {
        "x->y" | "xy" | "xtoy" | "x_to_y" | "->" => Some(Direction::XtoY),
        "y->x" | "yx" | "ytox" | "y_to_x" | "<-" => Some(Direction::YtoX),
        _ => None,
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Some(false),
        "1" | "true" | "yes" | "y" => Some(true),
        _ => None,
    }
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("manifest not found: {}", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let bad = |what: &str| CliError::Usage(format!("{}:{line}: {what}", path.display()));
        let pair_id = record.get(0).filter(|s| !s.is_empty()).ok_or_else(|| bad("missing pair_id"))?.to_string();
        let true_direction = record.get(1).and_then(parse_direction).ok_or_else(|| bad("true_direction must be x->y or y->x"))?;
        let excluded = match record.get(2) {
            Some(s) => parse_flag(s).ok_or_else(|| bad("excluded must be true or false"))?,
            None => false,
        };
        out.push(ManifestEntry { pair_id, true_direction, excluded });
    }
    Ok(out)
}

fn has_pair_files(dir: &Path) -> CliResult<bool> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("not a directory: {}", dir.display())));
    }
    Ok(std::fs::read_dir(dir)?.filter_map(|e| e.ok()).any(|e| e.path().extension().is_some_and(|x| x == "txt")))
}

fn rate(flags: impl Iterator<Item = bool>) -> Option<f64> {
    let (hits, total) = flags.fold((0usize, 0usize), |(h, t), f| (h + f as usize, t + 1));
    (total > 0).then(|| hits as f64 / total as f64)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn run_replication(config: &BenchmarkConfig, entry: &ManifestEntry, pair: &DataPair<f64>, rep: usize) -> Vec<ReplicationRow> {
    let seed = mix_seed(mix_seed(config.model.seed, fnv1a(&entry.pair_id)), rep as u64);
    let m = config.subsample.min(pair.len());
    let sample = subsample(pair, m, seed);
    let mut rows = Vec::with_capacity(4);
    for variant in [Variant::Adjusted, Variant::Unadjusted] {
        let dc = config.model.direction(config.alpha, variant.fixed_k(), seed);
        for direction in [Direction::XtoY, Direction::YtoX] {
            let result = match &sample {
                Ok(s) => test_direction(&s.x, &s.y, direction, &dc).map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            };
            let mut row = ReplicationRow {
                pair_id: entry.pair_id.clone(),
                rep,
                seed,
                variant,
                direction,
                causal: direction == entry.true_direction,
                t: None,
                quantile: None,
                p_value: None,
                reject: None,
                k_used: None,
                error: None,
            };
            match result {
                Ok(r) => {
                    row.t = Some(r.t);
                    row.quantile = Some(r.quantile_at_alpha);
                    row.p_value = Some(r.p_value);
                    row.reject = Some(r.reject_independence);
                    row.k_used = Some(r.k_used);
                }
                Err(e) => {
                    log::warn!("{} rep {rep} {variant:?} {direction}: {e}", entry.pair_id);
                    row.error = Some(e);
                }
            }
            rows.push(row);
        }
    }
    rows
}

fn summarize(entry: &ManifestEntry, n: usize, reps: usize, rows: &[ReplicationRow]) -> PairSummary {
    let pick =
        |variant: Variant, causal: bool| rows.iter().filter(move |r| r.variant == variant && r.causal == causal).filter_map(|r| r.reject);
    PairSummary {
        pair_id: entry.pair_id.clone(),
        true_direction: entry.true_direction,
        n,
        reps,
        type1_adjusted: rate(pick(Variant::Adjusted, true)),
        type1_unadjusted: rate(pick(Variant::Unadjusted, true)),
        power_adjusted: rate(pick(Variant::Adjusted, false)),
        power_unadjusted: rate(pick(Variant::Unadjusted, false)),
        mean_k_adjusted: mean(
            rows.iter().filter(|r| r.variant == Variant::Adjusted && r.causal).filter_map(|r| r.k_used).map(|k| k as f64),
        ),
        failures: rows.iter().filter(|r| r.error.is_some()).count(),
    }
}

pub fn execute(config: &BenchmarkConfig) -> CliResult<(Outcome, BenchmarkResults)> {
    if !has_pair_files(&config.dir)? {
        return Err(CliError::Usage(format!("no pair files (*.txt) in {}", config.dir.display())));
    }
    let manifest = read_manifest(&config.manifest)?;
    let is_excluded = |e: &ManifestEntry| {
        e.excluded || (config.default_exclusions && pair_number(&e.pair_id).is_some_and(|n| DEFAULT_EXCLUSIONS.contains(&n)))
    };
    let excluded: Vec<String> = manifest.iter().filter(|e| is_excluded(e)).map(|e| e.pair_id.clone()).collect();
    let selected: Vec<&ManifestEntry> = manifest.iter().filter(|e| !is_excluded(e)).collect();
    let mut seen = BTreeSet::new();
    if let Some(dup) = selected.iter().find(|e| !seen.insert(e.pair_id.as_str())) {
        return Err(CliError::Usage(format!("pair {} listed twice in the manifest", dup.pair_id)));
    }
    if selected.is_empty() {
        return Err(CliError::Usage("every pair in the manifest is excluded".into()));
    }
    let pairs = selected.iter().map(|e| load_pair(&config.dir.join(format!("{}.txt", e.pair_id)))).collect::<CliResult<Vec<_>>>()?;
    for (e, p) in selected.iter().zip(&pairs) {
        if p.len() < config.subsample {
            log::warn!("{} has {} rows, fewer than --subsample {}; using all rows", e.pair_id, p.len(), config.subsample);
        }
    }

    let jobs: Vec<(usize, usize)> = (0..selected.len()).flat_map(|p| (0..config.reps).map(move |r| (p, r))).collect();
    let replications: Vec<ReplicationRow> = jobs
        .par_iter()
        .map(|&(p, rep)| run_replication(config, selected[p], &pairs[p], rep))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let summaries: Vec<PairSummary> = selected
        .iter()
        .zip(&pairs)
        .map(|(e, p)| {
            let rows: Vec<ReplicationRow> = replications.iter().filter(|r| r.pair_id == e.pair_id).cloned().collect();
            summarize(e, p.len(), config.reps, &rows)
        })
        .collect();
    let results = BenchmarkResults {
        mean_type1_adjusted: mean(summaries.iter().filter_map(|s| s.type1_adjusted)),
        mean_type1_unadjusted: mean(summaries.iter().filter_map(|s| s.type1_unadjusted)),
        pairs: summaries,
        excluded,
        replications,
    };

    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    let mut summary = format!("{} pairs, {} replications each\n", results.pairs.len(), config.reps);
    for s in &results.pairs {
        let _ = writeln!(
            summary,
            "  {}: type-I adjusted {}, unadjusted {}{}",
            s.pair_id,
            fmt(s.type1_adjusted),
            fmt(s.type1_unadjusted),
            if s.failures > 0 { format!(" ({} failed tests)", s.failures) } else { String::new() }
        );
    }
    let _ = writeln!(
        summary,
        "  mean type-I error: adjusted {}, unadjusted {}",
        fmt(results.mean_type1_adjusted),
        fmt(results.mean_type1_unadjusted)
    );
    let outcome =
        Outcome { config: serde_json::to_value(config)?, seed: config.model.seed, results: serde_json::to_value(&results)?, summary };
    Ok((outcome, results))
}

/// Writes the per-pair table.
pub fn write_pair_csv(path: &Path, results: &BenchmarkResults) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in &results.pairs {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_replication_csv(path: &Path, results: &BenchmarkResults) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &results.replications {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_numbers() {
        assert_eq!(pair_number("pair0012"), Some(12));
        assert_eq!(pair_number("105"), Some(105));
        assert_eq!(pair_number("abc"), None);
    }

    #[test]
    fn directions_and_flags() {
        assert_eq!(parse_direction(" x->y "), Some(Direction::XtoY));
        assert_eq!(parse_direction("Y->X"), Some(Direction::YtoX));
        assert_eq!(parse_direction("sideways"), None);
        assert_eq!(parse_flag(""), Some(false));
        assert_eq!(parse_flag("TRUE"), Some(true));
        assert_eq!(parse_flag("maybe"), None);
    }

    #[test]
    fn pair_seeds_differ() {
        assert_ne!(fnv1a("pair0001"), fnv1a("pair0002"));
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
    }

    #[test]
    fn manifest_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "pair_id,true_direction,excluded\npair0001,x->y,\npair0002,y->x,true\npair0003,x->y\n").unwrap();
        let m = read_manifest(&path).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m[1].excluded && !m[0].excluded && !m[2].excluded);
        assert_eq!(m[1].true_direction, Direction::YtoX);

        std::fs::write(&path, "pair_id,true_direction\npair0001,up\n").unwrap();
        let err = read_manifest(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }

    #[test]
    fn rates() {
        assert_eq!(rate([true, false, true, true].into_iter()), Some(0.75));
        assert_eq!(rate(std::iter::empty()), None);
    }
}
