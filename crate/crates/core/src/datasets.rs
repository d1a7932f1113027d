//! Cause-effect pair files and the synthetic generators used in the studies.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::direction_test::Direction;
use crate::scalar::{mean, standardized, variance};
use crate::{Error, Result, Scalar};

/// Distance between neighbouring centres in [`simulate_gaussian_mixture_grid`].
pub const GRID_SPACING: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPair<F> {
    pub x: Vec<F>,
    pub y: Vec<F>,
    pub true_direction: Option<Direction>,
    pub true_labels: Option<Vec<usize>>,
    pub source_id: String,
    /// Set by [`standardize`]: the statistics that were removed.
    pub standardization: Option<Standardization<F>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization<F> {
    pub x_mean: F,
    pub x_sd: F,
    pub y_mean: F,
    pub y_sd: F,
}

impl<F: Scalar> DataPair<F> {
    pub fn new(x: Vec<F>, y: Vec<F>, source_id: impl Into<String>) -> Result<Self> {
        let pair = Self { x, y, true_direction: None, true_labels: None, source_id: source_id.into(), standardization: None };
        pair.validate()?;
        Ok(pair)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::InvalidData(format!("x has {} values, y has {}", self.x.len(), self.y.len())));
        }
        if self.x.len() < 2 {
            return Err(Error::SampleTooSmall { n: self.x.len(), min: 2 });
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite observation".into()));
        }
        if let Some(l) = &self.true_labels {
            if l.len() != self.x.len() {
                return Err(Error::InvalidData(format!("{} labels for {} observations", l.len(), self.x.len())));
            }
        }
        Ok(())
    }
}

/// Reads a whitespace-separated pair file: first column `x`, second `y`.
///
/// Blank lines are skipped and further columns are ignored with a warning.
pub fn load_pair_file<F: Scalar>(path: impl AsRef<Path>) -> Result<DataPair<F>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_pair(&text, id)
}

/// Parses pair-file contents; see [`load_pair_file`].
pub fn parse_pair<F: Scalar>(text: &str, source_id: String) -> Result<DataPair<F>> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut warned = false;
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let values = tokens
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: lineno, message: format!("not a number: {t:?}") }))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() < 2 {
            return Err(Error::Format(format!("line {lineno} has {} column(s), need at least 2", values.len())));
        }
        if values.len() > 2 && !warned {
            log::warn!("{source_id}: using the first 2 of {} columns", values.len());
            warned = true;
        }
        if values[..2].iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse { line: lineno, message: "non-finite value".into() });
        }
        x.push(F::of(values[0]));
        y.push(F::of(values[1]));
    }
    DataPair::new(x, y, source_id)
}

/// Writes the pair in the two-column format [`load_pair_file`] reads.
pub fn write_pair_file<F: Scalar>(pair: &DataPair<F>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_pair(pair))?;
    Ok(())
}

/// Two whitespace-separated columns, one observation per line.
pub fn format_pair<F: Scalar>(pair: &DataPair<F>) -> String {
    let mut out = String::new();
    for i in 0..pair.len() {
        let _ = writeln!(out, "{} {}", pair.x[i].to_f64_lossy(), pair.y[i].to_f64_lossy());
    }
    out
}

/// One label per line, in observation order.
pub fn format_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

/// Reads a sidecar written by [`format_labels`].
pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().map_err(|_| Error::Parse { line: i + 1, message: format!("not a label: {l:?}") }))
        .collect()
}

/// Centres both coordinates and scales them to unit variance (1/n).
pub fn standardize<F: Scalar>(pair: &DataPair<F>) -> Result<DataPair<F>> {
    let x = standardized(&pair.x, "x")?;
    let y = standardized(&pair.y, "y")?;
    let stats =
        Standardization { x_mean: mean(&pair.x), x_sd: variance(&pair.x).sqrt(), y_mean: mean(&pair.y), y_sd: variance(&pair.y).sqrt() };
    Ok(DataPair { x, y, standardization: Some(stats), ..pair.clone() })
}

/// Regression function of one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeFn<F> {
    /// `Σ_i coeffs[i] · x^i`.
    Polynomial { coeffs: Vec<F> },
}

impl<F: Scalar> RegimeFn<F> {
    pub fn eval(&self, x: F) -> F {
        match self {
            RegimeFn::Polynomial { coeffs } => coeffs.iter().rev().fold(F::zero(), |acc, &c| acc * x + c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XDistribution<F> {
    Uniform { low: F, high: F },
    Normal { mean: F, sd: F },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime<F> {
    pub function: RegimeFn<F>,
    pub weight: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec<F> {
    pub regimes: Vec<Regime<F>>,
    pub noise_sd: F,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub x_distribution: XDistribution<F>,
}

impl<F: Scalar> SimSpec<F> {
    /// Three equally weighted regimes `x³`, `0.5x` and `0.8 − x³` on
    /// `x ~ U[0, 1.1]` with noise sd 0.05.
    pub fn three_regime(n: usize, seed: u64) -> Self {
        let poly = |c: &[f64]| RegimeFn::Polynomial { coeffs: c.iter().map(|&v| F::of(v)).collect() };
        let w = F::one() / F::of(3.0);
        Self {
            regimes: vec![
                Regime { function: poly(&[0.0, 0.0, 0.0, 1.0]), weight: w },
                Regime { function: poly(&[0.0, 0.5]), weight: w },
                Regime { function: poly(&[0.8, 0.0, 0.0, -1.0]), weight: w },
            ],
            noise_sd: F::of(0.05),
            n,
            seed,
            x_distribution: XDistribution::Uniform { low: F::zero(), high: F::of(1.1) },
        }
    }

    /// Rescales the regime weights to sum to one; returns whether they changed.
    pub fn normalize_weights(&mut self) -> bool {
        let total: F = self.regimes.iter().map(|r| r.weight).sum();
        if !(total > F::zero()) || (total - F::one()).abs() <= F::of(1e-12) {
            return false;
        }
        for r in &mut self.regimes {
            r.weight /= total;
        }
        true
    }

    pub fn validate(&self) -> Result<()> {
        if self.regimes.is_empty() {
            return Err(Error::InvalidParameter("at least one regime required".into()));
        }
        if self.regimes.iter().any(|r| !(r.weight > F::zero()) || !r.weight.is_finite()) {
            return Err(Error::InvalidParameter("regime weights must be positive".into()));
        }
        if !(self.noise_sd > F::zero()) {
            return Err(Error::InvalidParameter(format!("noise_sd must be > 0, got {}", self.noise_sd)));
        }
        if self.n < 10 {
            return Err(Error::InvalidParameter(format!("n must be >= 10, got {}", self.n)));
        }
        match self.x_distribution {
            XDistribution::Uniform { low, high } if !(high > low) => {
                Err(Error::InvalidParameter("uniform range must have high > low".into()))
            }
            XDistribution::Normal { sd, .. } if !(sd > F::zero()) => Err(Error::InvalidParameter("normal sd must be > 0".into())),
            _ => Ok(()),
        }
    }
}

fn normal_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws `x`, a regime per point by weight, and `y = f_regime(x) + ε`.
pub fn simulate_mixture_anm<F: Scalar>(spec: &SimSpec<F>) -> Result<DataPair<F>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let weights: Vec<f64> = spec.regimes.iter().map(|r| r.weight.to_f64_lossy()).collect();
    let total: f64 = weights.iter().sum();
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let xi = match spec.x_distribution {
            XDistribution::Uniform { low, high } => low + (high - low) * F::of(rng.random::<f64>()),
            XDistribution::Normal { mean, sd } => mean + sd * F::of(normal_draw(&mut rng)),
        };
        let mut u = rng.random::<f64>() * total;
        let mut c = weights.len() - 1;
        for (j, &w) in weights.iter().enumerate() {
            if u < w {
                c = j;
                break;
            }
            u -= w;
        }
        let eps = spec.noise_sd * F::of(normal_draw(&mut rng));
        x.push(xi);
        y.push(spec.regimes[c].function.eval(xi) + eps);
        labels.push(c);
    }
    Ok(DataPair {
        x,
        y,
        true_direction: Some(Direction::XtoY),
        true_labels: Some(labels),
        source_id: format!("mixture-anm-seed{}", spec.seed),
        standardization: None,
    })
}

/// `k` standard bivariate Gaussians centred at `(4j, 4j)`, `n_per` points each.
pub fn simulate_gaussian_mixture_grid<F: Scalar>(k: usize, n_per: usize, seed: u64) -> Result<DataPair<F>> {
    if !(1..=8).contains(&k) {
        return Err(Error::InvalidParameter(format!("k must lie in 1..=8, got {k}")));
    }
    if n_per < 10 {
        return Err(Error::InvalidParameter(format!("n_per must be >= 10, got {n_per}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k * n_per;
    let (mut x, mut y, mut labels) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for j in 0..k {
        let c = GRID_SPACING * j as f64;
        for _ in 0..n_per {
            x.push(F::of(c + normal_draw(&mut rng)));
            y.push(F::of(c + normal_draw(&mut rng)));
            labels.push(j);
        }
    }
    Ok(DataPair {
        x,
        y,
        true_direction: None,
        true_labels: Some(labels),
        source_id: format!("gaussian-grid-k{k}-seed{seed}"),
        standardization: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTest {
    /// Pearson correlation.
    pub statistic: f64,
    /// Fisher-z statistic `atanh(r)·√df`.
    pub z: f64,
    pub p_value: f64,
    pub reject: bool,
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::DegenerateData("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn fisher_test(r: f64, df: f64, alpha: f64) -> Result<CorrelationTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(df > 0.0) {
        return Err(Error::SampleTooSmall { n: 0, min: 1 });
    }
    let z = r.atanh() * df.sqrt();
    let p_value = if z.is_finite() { 2.0 * Normal::standard().sf(z.abs()) } else { 0.0 };
    Ok(CorrelationTest { statistic: r, z, p_value, reject: p_value < alpha })
}

fn as_f64<F: Scalar>(v: &[F]) -> Vec<f64> {
    v.iter().map(|a| a.to_f64_lossy()).collect()
}

/// Pearson correlation ignoring labels, two-sided Fisher-z test.
pub fn marginal_correlation_test<F: Scalar>(pair: &DataPair<F>, alpha: f64) -> Result<CorrelationTest> {
    let n = pair.len();
    if n < 4 {
        return Err(Error::SampleTooSmall { n, min: 4 });
    }
    let r = pearson(&as_f64(&pair.x), &as_f64(&pair.y))?;
    fisher_test(r, (n - 3) as f64, alpha)
}

/// Correlation of the cluster-wise centred data, Fisher-z test with
/// `n − k − 2` degrees of freedom.
pub fn within_cluster_correlation_test<F: Scalar>(pair: &DataPair<F>, alpha: f64) -> Result<CorrelationTest> {
    let labels = pair.true_labels.as_ref().ok_or_else(|| Error::InvalidParameter("labels required".into()))?;
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for ((&c, a), b) in labels.iter().zip(&pair.x).zip(&pair.y) {
        sums[c].0 += a.to_f64_lossy();
        sums[c].1 += b.to_f64_lossy();
        sums[c].2 += 1;
    }
    if let Some((c, s)) = sums.iter().enumerate().find(|(_, s)| s.2 < 4) {
        return Err(Error::ClusterTooSmall { cluster: c, size: s.2, min: 4 });
    }
    let centred = |v: &[F], pick: fn(&(f64, f64, usize)) -> f64| -> Vec<f64> {
        v.iter().zip(labels).map(|(a, &c)| a.to_f64_lossy() - pick(&sums[c]) / sums[c].2 as f64).collect()
    };
    let xc = centred(&pair.x, |s| s.0);
    let yc = centred(&pair.y, |s| s.1);
    let r = pearson(&xc, &yc)?;
    fisher_test(r, pair.len() as f64 - k as f64 - 2.0, alpha)
}

/// Uniform subsample of `m` rows without replacement, kept in original order.
pub fn subsample<F: Scalar>(pair: &DataPair<F>, m: usize, seed: u64) -> Result<DataPair<F>> {
    let n = pair.len();
    if m > n {
        return Err(Error::InvalidParameter(format!("cannot take {m} rows from {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    let pick = |v: &[F]| idx.iter().map(|&i| v[i]).collect::<Vec<F>>();
    Ok(DataPair {
        x: pick(&pair.x),
        y: pick(&pair.y),
        true_labels: pair.true_labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        ..pair.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(x: &[f64], y: &[f64]) -> DataPair<f64> {
        DataPair::new(x.to_vec(), y.to_vec(), "t").unwrap()
    }

    #[test]
    fn parses_two_columns() {
        let p: DataPair<f64> = parse_pair("0 1\n2 3\n", "a".into()).unwrap();
        assert_eq!((p.x, p.y), (vec![0.0, 2.0], vec![1.0, 3.0]));
        let p: DataPair<f64> = parse_pair("  1.5\t-2e3  9\n\n4 5 6\n", "b".into()).unwrap();
        assert_eq!((p.x, p.y), (vec![1.5, 4.0], vec![-2000.0, 5.0]));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = parse_pair::<f64>("1 2\n3 4\n5 abc\n", "a".into()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(matches!(parse_pair::<f64>("1 2\n3\n", "a".into()), Err(Error::Format(_))));
        assert!(matches!(parse_pair::<f64>("1 2\n3 NaN\n", "a".into()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn file_round_trip_preserves_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pair0056.txt");
        let mut text = String::new();
        for i in 0..5000 {
            let _ = writeln!(text, "{} {}", i as f64 * 0.25, (i as f64).sin());
        }
        std::fs::write(&path, &text).unwrap();
        let p: DataPair<f64> = load_pair_file(&path).unwrap();
        assert_eq!(p.len(), 5000);
        assert_eq!(p.source_id, "pair0056");
        let out = dir.path().join("copy.txt");
        write_pair_file(&p, &out).unwrap();
        let q: DataPair<f64> = load_pair_file(&out).unwrap();
        assert_eq!((p.x, p.y), (q.x, q.y));
        assert!(load_pair_file::<f64>(dir.path().join("missing.txt")).is_err());
    }

    #[test]
    fn labels_go_to_a_sidecar() {
        let mut p = pair(&[1.0, 2.5], &[3.0, 4.0]);
        p.true_labels = Some(vec![0, 2]);
        assert_eq!(format_pair(&p), "1 3\n2.5 4\n");
        assert_eq!(format_labels(&[0, 2]), "0\n2\n");
        assert_eq!(parse_labels("0\n2\n\n").unwrap(), vec![0, 2]);
        assert!(matches!(parse_labels("0\nx\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn standardize_examples() {
        let s = standardize(&pair(&[0.0, 2.0], &[5.0, 7.0])).unwrap();
        assert_eq!(s.x, vec![-1.0, 1.0]);
        let st = s.standardization.unwrap();
        assert_eq!((st.x_mean, st.x_sd, st.y_mean, st.y_sd), (1.0, 1.0, 6.0, 1.0));
        let p = pair(&[0.3, 1.9, -4.0, 2.2, 0.1], &[1.0, -1.0, 0.5, 7.0, 3.0]);
        let once = standardize(&p).unwrap();
        let twice = standardize(&once).unwrap();
        for (a, b) in once.x.iter().chain(&once.y).zip(twice.x.iter().chain(&twice.y)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(standardize(&pair(&[1.0, 2.0], &[3.0, 3.0])), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn three_regime_generator_self_check() {
        let spec = SimSpec::<f64>::three_regime(300, 11);
        let d = simulate_mixture_anm(&spec).unwrap();
        let labels = d.true_labels.clone().unwrap();
        assert_eq!(d.true_direction, Some(Direction::XtoY));
        assert!(d.x.iter().all(|&v| (0.0..=1.1).contains(&v)));
        for c in 0..3 {
            let r: Vec<f64> = (0..300).filter(|&i| labels[i] == c).map(|i| d.y[i] - spec.regimes[c].function.eval(d.x[i])).collect();
            assert!(r.len() > 50);
            let m = r.iter().sum::<f64>() / r.len() as f64;
            let sd = (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
            assert!((0.04..=0.06).contains(&sd), "regime {c}: sd {sd}");
        }
        assert_eq!(d, simulate_mixture_anm(&spec).unwrap());
    }

    #[test]
    fn linear_regime_is_strongly_correlated() {
        let spec = SimSpec {
            regimes: vec![Regime { function: RegimeFn::Polynomial { coeffs: vec![0.0, 0.5] }, weight: 1.0 }],
            ..SimSpec::three_regime(300, 3)
        };
        let d = simulate_mixture_anm(&spec).unwrap();
        assert!(marginal_correlation_test(&d, 0.05).unwrap().statistic > 0.9);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let base = SimSpec::<f64>::three_regime(100, 0);
        let zero_noise = SimSpec { noise_sd: 0.0, ..base.clone() };
        assert!(matches!(simulate_mixture_anm(&zero_noise), Err(Error::InvalidParameter(_))));
        assert!(simulate_mixture_anm(&SimSpec { n: 5, ..base.clone() }).is_err());
        assert!(simulate_mixture_anm(&SimSpec { regimes: vec![], ..base.clone() }).is_err());
        let bad_x = SimSpec { x_distribution: XDistribution::Uniform { low: 1.0, high: 1.0 }, ..base };
        assert!(simulate_mixture_anm(&bad_x).is_err());
    }

    #[test]
    fn weights_normalize() {
        let mut spec = SimSpec::<f64>::three_regime(30, 0);
        assert!(!spec.normalize_weights());
        for r in &mut spec.regimes {
            r.weight = 2.0;
        }
        assert!(spec.normalize_weights());
        assert!(spec.regimes.iter().all(|r| (r.weight - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn polynomial_evaluation() {
        let f = RegimeFn::<f64>::Polynomial { coeffs: vec![0.8, 0.0, 0.0, -1.0] };
        assert!((f.eval(0.5) - 0.675).abs() < 1e-15);
    }

    #[test]
    fn grid_layout() {
        let d = simulate_gaussian_mixture_grid::<f64>(3, 20, 1).unwrap();
        assert_eq!(d.len(), 60);
        let labels = d.true_labels.as_ref().unwrap();
        for j in 0..3 {
            let xs: Vec<f64> = (0..60).filter(|&i| labels[i] == j).map(|i| d.x[i]).collect();
            assert_eq!(xs.len(), 20);
            let m = xs.iter().sum::<f64>() / 20.0;
            assert!((m - 4.0 * j as f64).abs() < 1.0);
        }
        assert!(simulate_gaussian_mixture_grid::<f64>(9, 20, 1).is_err());
        assert!(simulate_gaussian_mixture_grid::<f64>(2, 5, 1).is_err());
    }

    #[test]
    fn eight_centres_dominate_marginal_correlation() {
        for seed in 0..20 {
            let d = simulate_gaussian_mixture_grid::<f64>(8, 100, seed).unwrap();
            assert!(marginal_correlation_test(&d, 0.05).unwrap().statistic > 0.8);
        }
    }

    #[test]
    fn correlation_test_extremes() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let t = marginal_correlation_test(&pair(&x, &x), 0.05).unwrap();
        assert_eq!((t.statistic, t.reject), (1.0, true));
        let t = marginal_correlation_test(&pair(&x, &neg), 0.05).unwrap();
        assert_eq!((t.statistic, t.reject), (-1.0, true));
        assert!(matches!(marginal_correlation_test(&pair(&x, &[1.0; 20]), 0.05), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn fisher_p_value_oracle() {
        // r = 0.3, n = 40: z = atanh(0.3)·√37, two-sided normal tail.
        let t = fisher_test(0.3, 37.0, 0.05).unwrap();
        let z = 0.309_519_604_203_111_75 * 37f64.sqrt();
        assert!((t.z - z).abs() < 1e-12);
        assert!((t.p_value - 0.059_736_391_306_315).abs() < 1e-9, "{}", t.p_value);
        assert!(!t.reject);
    }

    #[test]
    fn within_cluster_test_cases() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 1.7).sin()).collect();
        let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.9).cos()).collect();
        let mut p = pair(&x, &y);
        assert!(matches!(within_cluster_correlation_test(&p, 0.05), Err(Error::InvalidParameter(_))));
        p.true_labels = Some(vec![0; 20]);
        assert_eq!(within_cluster_correlation_test(&p, 0.05).unwrap(), marginal_correlation_test(&p, 0.05).unwrap());
        // y = x inside each of two shifted clusters.
        let xs: Vec<f64> = (0..20).map(|i| (i % 10) as f64 + if i < 10 { 0.0 } else { 50.0 }).collect();
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, v)| v + if i < 10 { 0.0 } else { -80.0 }).collect();
        let mut q = pair(&xs, &ys);
        q.true_labels = Some((0..20).map(|i| i / 10).collect());
        let t = within_cluster_correlation_test(&q, 0.05).unwrap();
        assert!((t.statistic - 1.0).abs() < 1e-12 && t.reject);
        q.true_labels = Some((0..20).map(|i| usize::from(i >= 17)).collect());
        assert!(matches!(within_cluster_correlation_test(&q, 0.05), Err(Error::ClusterTooSmall { size: 3, .. })));
    }

    #[test]
    fn subsample_examples() {
        let x: Vec<f64> = (0..500).map(|i| i as f64).collect();
        let mut p = pair(&x, &x);
        p.true_labels = Some((0..500).map(|i| i % 4).collect());
        let s = subsample(&p, 90, 1).unwrap();
        assert_eq!(s.len(), 90);
        assert!(s.x.windows(2).all(|w| w[0] < w[1]));
        assert!(s.x.iter().zip(s.true_labels.as_ref().unwrap()).all(|(&v, &l)| v as usize % 4 == l));
        let all = subsample(&p, 500, 2).unwrap();
        assert_eq!(all.x, x);
        assert!(subsample(&p, 501, 0).is_err());
        let distinct = (0..100).filter(|&s| subsample(&p, 90, 2 * s).unwrap().x != subsample(&p, 90, 2 * s + 1).unwrap().x).count();
        assert_eq!(distinct, 100);
        assert_eq!(subsample(&p, 90, 7).unwrap(), subsample(&p, 90, 7).unwrap());
    }

    #[test]
    fn pair_validation() {
        assert!(DataPair::new(vec![1.0f64], vec![2.0], "a").is_err());
        assert!(DataPair::new(vec![1.0f64, 2.0], vec![2.0], "a").is_err());
        assert!(DataPair::new(vec![1.0f64, f64::INFINITY], vec![2.0, 3.0], "a").is_err());
    }
}
