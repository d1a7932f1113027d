//! Clustering of the latent parameters with an imprecise component count.
//!
//! For every `k` in `K−Δ..=K+Δ` a one-dimensional k-means chain is run and
//! scored by the marginal log-likelihood
//!
//! ```text
//! ℓ(z|θ,k) = −(n/2) log 2πσ² − SSW/(2σ²) − ½ Σ_c log(κτ² n_c + 1)
//! ```
//!
//! and the best-scoring `k` wins. A Gibbs sampler over centres, labels and
//! `k` is provided as the stochastic alternative.
//!
//! Labels are zero-based: a model with `k` clusters uses labels `0..k`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::{log_sum_exp, mean};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig<F> {
    /// Centre `K` of the candidate range for the number of clusters.
    pub k_center: usize,
    /// Half-width `Δ`; chains run for `k` in `K−Δ..=K+Δ`.
    pub k_delta: usize,
    /// `log κ`. `None` uses `k·n/4` for each chain.
    pub kappa_log: Option<F>,
    pub max_sweeps: usize,
    /// Seeded k-means restarts per chain.
    pub n_init: usize,
    pub seed: u64,
}

impl<F: Scalar> Default for ClusterConfig<F> {
    fn default() -> Self {
        Self { k_center: 4, k_delta: 2, kappa_log: None, max_sweeps: 100, n_init: 10, seed: 0 }
    }
}

impl<F: Scalar> ClusterConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.k_center < 1 {
            return Err(Error::InvalidParameter("k_center must be >= 1".into()));
        }
        if self.k_delta >= self.k_center {
            return Err(Error::InvalidParameter(format!("K - Δ must be >= 1, got K = {} and Δ = {}", self.k_center, self.k_delta)));
        }
        if let Some(kl) = self.kappa_log {
            if !(kl >= F::zero()) {
                return Err(Error::InvalidParameter(format!("kappa_log must be >= 0, got {kl}")));
            }
        }
        if self.max_sweeps < 1 || self.n_init < 1 {
            return Err(Error::InvalidParameter("max_sweeps and n_init must be >= 1".into()));
        }
        Ok(())
    }

    pub fn k_range(&self) -> std::ops::RangeInclusive<usize> {
        (self.k_center - self.k_delta)..=(self.k_center + self.k_delta)
    }

    fn kappa_log_for(&self, k: usize, n: usize) -> F {
        self.kappa_log.unwrap_or_else(|| default_kappa_log(k, n))
    }
}

/// The default `log κ = k·n/4`.
pub fn default_kappa_log<F: Scalar>(k: usize, n: usize) -> F {
    F::of_usize(k * n) / F::of(4.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<F> {
    pub labels: Vec<usize>,
    pub k: usize,
    pub centers: Vec<F>,
    pub sigma2: F,
    pub tau2: F,
    pub score: F,
    /// Best score of each chain that produced a valid clustering.
    pub per_k_scores: BTreeMap<usize, F>,
}

impl<F: Scalar> ClusterModel<F> {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.labels, self.k)
    }

    /// Indices of the observations in each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

fn cluster_sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &c in labels {
        sizes[c] += 1;
    }
    sizes
}

fn num_clusters(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

fn check_labels<F>(theta: &[F], labels: &[usize], k: usize) -> Result<Vec<usize>> {
    if theta.len() != labels.len() {
        return Err(Error::InvalidData(format!("{} values but {} labels", theta.len(), labels.len())));
    }
    if labels.iter().any(|&c| c >= k) {
        return Err(Error::InvalidData(format!("label out of range for k = {k}")));
    }
    let sizes = cluster_sizes(labels, k);
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidData(format!("cluster {c} is empty")));
    }
    Ok(sizes)
}

fn cluster_means<F: Scalar>(theta: &[F], labels: &[usize], k: usize) -> Vec<F> {
    let mut sums = vec![F::zero(); k];
    let mut counts = vec![0usize; k];
    for (&t, &c) in theta.iter().zip(labels) {
        sums[c] += t;
        counts[c] += 1;
    }
    sums.iter().zip(&counts).map(|(&s, &n)| s / F::of_usize(n)).collect()
}

fn sum_squared_within<F: Scalar>(theta: &[F], labels: &[usize], centers: &[F]) -> F {
    theta.iter().zip(labels).map(|(&t, &c)| (t - centers[c]) * (t - centers[c])).sum()
}

fn nearest_center<F: Scalar>(t: F, centers: &[F]) -> usize {
    let mut best = 0;
    let mut best_d = (t - centers[0]).abs();
    for (c, &m) in centers.iter().enumerate().skip(1) {
        let d = (t - m).abs();
        // Strict comparison keeps the smallest index on ties.
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn distinct_count<F: Scalar>(theta: &[F]) -> usize {
    let mut v = theta.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.dedup();
    v.len()
}

/// Lloyd iterations in one dimension from the given centres.
///
/// Runs until the labels stop changing or `max_sweeps` sweeps have been made.
/// An emptied cluster takes over the point farthest from its own centre.
pub fn kmeans_1d<F: Scalar>(theta: &[F], k: usize, init_centers: &[F], max_sweeps: usize) -> Result<(Vec<usize>, Vec<F>)> {
    if k == 0 || init_centers.len() != k {
        return Err(Error::InvalidParameter(format!("need {k} initial centres, got {}", init_centers.len())));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidData("non-finite latent value".into()));
    }
    let distinct = distinct_count(theta);
    if k > distinct {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds the {distinct} distinct values")));
    }

    let mut centers = init_centers.to_vec();
    let mut labels: Vec<usize> = theta.iter().map(|&t| nearest_center(t, &centers)).collect();
    repair_empty(theta, &mut labels, &mut centers);
    for _ in 0..max_sweeps {
        centers = cluster_means(theta, &labels, k);
        let mut next: Vec<usize> = theta.iter().map(|&t| nearest_center(t, &centers)).collect();
        repair_empty(theta, &mut next, &mut centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    centers = cluster_means(theta, &labels, k);
    Ok((labels, centers))
}

fn repair_empty<F: Scalar>(theta: &[F], labels: &mut [usize], centers: &mut [F]) {
    let k = centers.len();
    loop {
        let sizes = cluster_sizes(labels, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        // Only points from clusters with at least two members may move, so no
        // new empty cluster is created.
        let donor = (0..theta.len()).filter(|&i| sizes[labels[i]] > 1).map(|i| (i, (theta[i] - centers[labels[i]]).abs())).fold(
            None,
            |best: Option<(usize, F)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            },
        );
        let Some((i, _)) = donor else { return };
        labels[i] = empty;
        centers[empty] = theta[i];
    }
}

/// k-means++ seeding: the first centre uniformly, each further one with
/// probability proportional to the squared distance to the nearest chosen centre.
pub fn kmeans_plus_plus<F: Scalar, R: Rng + ?Sized>(theta: &[F], k: usize, rng: &mut R) -> Vec<F> {
    let n = theta.len();
    let mut centers = vec![theta[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = theta.iter().map(|&t| (t - centers[0]).to_f64_lossy().powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 && u < w {
                pick = i;
                break;
            }
            u -= w;
        }
        // Guard against rounding landing on an already chosen point.
        if d2[pick] == 0.0 {
            pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
        }
        let c = theta[pick];
        centers.push(c);
        for (w, &t) in d2.iter_mut().zip(theta) {
            *w = w.min((t - c).to_f64_lossy().powi(2));
        }
    }
    centers
}

/// Best of `n_init` seeded k-means runs by within-cluster squared error.
pub fn kmeans_restarts<F: Scalar>(theta: &[F], k: usize, n_init: usize, max_sweeps: usize, seed: u64) -> Result<(Vec<usize>, Vec<F>)> {
    let mut best: Option<(F, Vec<usize>, Vec<F>)> = None;
    for restart in 0..n_init.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64, restart as u64));
        let init = kmeans_plus_plus(theta, k, &mut rng);
        if init.len() < k {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds the distinct values")));
        }
        let (labels, centers) = kmeans_1d(theta, k, &init, max_sweeps)?;
        let sse = sum_squared_within(theta, &labels, &centers);
        if best.as_ref().is_none_or(|(b, _, _)| sse < *b) {
            best = Some((sse, labels, centers));
        }
    }
    let (_, labels, centers) = best.expect("at least one restart");
    Ok((labels, centers))
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // SplitMix64 finaliser over the combined inputs.
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `σ² = (1/N) Σ_c Σ_{i∈c} (θ_i − θ̄_c)²`.
pub fn within_variance<F: Scalar>(theta: &[F], labels: &[usize]) -> Result<F> {
    let k = num_clusters(labels);
    check_labels(theta, labels, k)?;
    let means = cluster_means(theta, labels, k);
    let s2 = sum_squared_within(theta, labels, &means) / F::of_usize(theta.len());
    if !(s2 > F::zero()) {
        return Err(Error::DegenerateData("all latent values within every cluster are identical".into()));
    }
    Ok(s2)
}

/// `τ² = (1/(kσ²)) Σ_c (θ̄_c − θ̄)²`.
pub fn variance_ratio<F: Scalar>(theta: &[F], labels: &[usize], sigma2: F) -> Result<F> {
    if !(sigma2 > F::zero()) {
        return Err(Error::InvalidParameter(format!("sigma2 must be > 0, got {sigma2}")));
    }
    let k = num_clusters(labels);
    check_labels(theta, labels, k)?;
    let grand = mean(theta);
    let between: F = cluster_means(theta, labels, k).into_iter().map(|m| (m - grand) * (m - grand)).sum();
    Ok(between / (F::of_usize(k) * sigma2))
}

/// `log(e^a + 1)` without overflow.
fn softplus<F: Scalar>(a: F) -> F {
    if a > F::zero() {
        a + (-a).exp().ln_1p()
    } else {
        a.exp().ln_1p()
    }
}

/// `log(κ τ² n_c + 1)` evaluated from `log κ`.
fn log_penalty<F: Scalar>(kappa_log: F, tau2: F, n_c: usize) -> F {
    if tau2 <= F::zero() {
        return F::zero();
    }
    softplus(kappa_log + (tau2 * F::of_usize(n_c)).ln())
}

/// The clustering score `ℓ(z|θ,k)` with `σ²` and `τ²` computed from the labels.
///
/// `labels` must use every value in `0..k`.
pub fn marginal_log_likelihood<F: Scalar>(labels: &[usize], theta: &[F], k: usize, kappa_log: F) -> Result<F> {
    let sizes = check_labels(theta, labels, k)?;
    let sigma2 = within_variance(theta, labels)?;
    let tau2 = variance_ratio(theta, labels, sigma2)?;
    Ok(score_from_parts(theta, labels, k, &sizes, sigma2, tau2, kappa_log))
}

fn score_from_parts<F: Scalar>(theta: &[F], labels: &[usize], k: usize, sizes: &[usize], sigma2: F, tau2: F, kappa_log: F) -> F {
    let n = F::of_usize(theta.len());
    let two = F::of(2.0);
    let means = cluster_means(theta, labels, k);
    let ssw = sum_squared_within(theta, labels, &means);
    let penalty: F = sizes.iter().map(|&nc| log_penalty(kappa_log, tau2, nc)).sum();
    -n / two * (two * F::PI() * sigma2).ln() - ssw / (two * sigma2) - penalty / two
}

struct Chain<F> {
    k: usize,
    labels: Vec<usize>,
    centers: Vec<F>,
    sigma2: F,
    tau2: F,
    score: F,
}

fn run_chain<F: Scalar>(theta: &[F], k: usize, config: &ClusterConfig<F>) -> Result<Chain<F>> {
    let (labels, centers) = kmeans_restarts(theta, k, config.n_init, config.max_sweeps, config.seed)?;
    let sigma2 = within_variance(theta, &labels)?;
    let tau2 = variance_ratio(theta, &labels, sigma2)?;
    let sizes = cluster_sizes(&labels, k);
    let score = score_from_parts(theta, &labels, k, &sizes, sigma2, tau2, config.kappa_log_for(k, theta.len()));
    Ok(Chain { k, labels, centers, sigma2, tau2, score })
}

/// Runs one chain per candidate `k` and keeps the highest-scoring clustering.
///
/// Chains run in parallel; the result does not depend on scheduling. Ties in
/// score go to the smaller `k`.
pub fn fit_clusters<F: Scalar>(theta: &[F], config: &ClusterConfig<F>) -> Result<ClusterModel<F>> {
    config.validate()?;
    let k_max = config.k_center + config.k_delta;
    if theta.len() < k_max {
        return Err(Error::SampleTooSmall { n: theta.len(), min: k_max });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidData("non-finite latent value".into()));
    }
    let ks: Vec<usize> = config.k_range().collect();
    let chains: Vec<Result<Chain<F>>> = ks.par_iter().map(|&k| run_chain(theta, k, config)).collect();

    let mut per_k_scores = BTreeMap::new();
    let mut best: Option<Chain<F>> = None;
    for (k, chain) in ks.iter().zip(chains) {
        match chain {
            Ok(c) => {
                per_k_scores.insert(*k, c.score);
                if best.as_ref().is_none_or(|b| c.score > b.score) {
                    best = Some(c);
                }
            }
            Err(e) => log::debug!("clustering chain k = {k} skipped: {e}"),
        }
    }
    let best = best.ok_or(Error::ClusteringFailure)?;
    Ok(ClusterModel {
        labels: best.labels,
        k: best.k,
        centers: best.centers,
        sigma2: best.sigma2,
        tau2: best.tau2,
        score: best.score,
        per_k_scores,
    })
}

fn standard_normal<F: Scalar, R: Rng + ?Sized>(rng: &mut R) -> F {
    F::of(rng.sample::<f64, _>(StandardNormal))
}

/// Draws every centre from its full conditional
/// `N(θ̄_c / (1 + 1/(n_c κτ²)), σ² / (n_c + 1/(κτ²)))`.
pub fn gibbs_sample_centers<F: Scalar, R: Rng + ?Sized>(
    theta: &[F],
    labels: &[usize],
    sigma2: F,
    tau2: F,
    kappa_log: F,
    rng: &mut R,
) -> Result<Vec<F>> {
    let k = num_clusters(labels);
    check_labels(theta, labels, k)?;
    if !(sigma2 > F::zero()) || !(tau2 >= F::zero()) {
        return Err(Error::InvalidParameter("sigma2 must be > 0 and tau2 >= 0".into()));
    }
    let log_kappa_tau2 = if tau2 > F::zero() { kappa_log + tau2.ln() } else { F::neg_infinity() };
    Ok(draw_centers(theta, labels, k, sigma2, log_kappa_tau2, rng))
}

/// Centre draws given `log(κτ²)`. An empty cluster draws from the prior
/// `N(0, κτ²σ²)`.
fn draw_centers<F: Scalar, R: Rng + ?Sized>(theta: &[F], labels: &[usize], k: usize, sigma2: F, log_kappa_tau2: F, rng: &mut R) -> Vec<F> {
    let mut sums = vec![F::zero(); k];
    let mut counts = vec![F::zero(); k];
    for (&t, &c) in theta.iter().zip(labels) {
        sums[c] += t;
        counts[c] += F::one();
    }
    // 1/(κτ²); infinite when τ² = 0, which pins every centre at zero.
    let inv_prior = (-log_kappa_tau2).exp();
    sums.iter()
        .zip(&counts)
        .map(|(&sum, &nc)| {
            if !inv_prior.is_finite() {
                return F::zero();
            }
            // θ̄_c (1 + 1/(n_c κτ²))⁻¹ = sum / (n_c + 1/(κτ²)).
            let prec = nc + inv_prior;
            sum / prec + (sigma2 / prec).sqrt() * standard_normal::<F, _>(rng)
        })
        .collect()
}

/// Draws each label with probability proportional to `φ((θ_i − μ_c)/σ)`.
pub fn gibbs_sample_labels<F: Scalar, R: Rng + ?Sized>(theta: &[F], centers: &[F], sigma2: F, rng: &mut R) -> Vec<usize> {
    let two = F::of(2.0);
    let mut logp = vec![F::zero(); centers.len()];
    theta
        .iter()
        .map(|&t| {
            for (lp, &m) in logp.iter_mut().zip(centers) {
                *lp = -(t - m) * (t - m) / (two * sigma2);
            }
            sample_log_weights(&logp, rng)
        })
        .collect()
}

fn sample_log_weights<F: Scalar, R: Rng + ?Sized>(logp: &[F], rng: &mut R) -> usize {
    let lse = log_sum_exp(logp);
    let mut u = rng.random::<f64>();
    for (c, &lp) in logp.iter().enumerate() {
        let p = (lp - lse).exp().to_f64_lossy();
        if u < p {
            return c;
        }
        u -= p;
    }
    // Rounding leftovers go to the most probable entry.
    logp.iter().enumerate().fold((0, F::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) }).0
}

/// Draws `k` with probability proportional to `exp ℓ(z_k|θ,k)`.
///
/// Entries whose labels are degenerate get zero weight. `kappa_log = None`
/// uses the default `k·n/4` for each entry.
pub fn gibbs_sample_k<F: Scalar, R: Rng + ?Sized>(
    theta: &[F],
    labels_per_k: &BTreeMap<usize, Vec<usize>>,
    kappa_log: Option<F>,
    rng: &mut R,
) -> Result<usize> {
    let ks: Vec<usize> = labels_per_k.keys().copied().collect();
    if ks.is_empty() {
        return Err(Error::InvalidParameter("no candidate k".into()));
    }
    let scores: Vec<F> = labels_per_k
        .iter()
        .map(|(&k, z)| {
            let kl = kappa_log.unwrap_or_else(|| default_kappa_log(k, theta.len()));
            marginal_log_likelihood(z, theta, k, kl).unwrap_or(F::neg_infinity())
        })
        .collect();
    if scores.iter().all(|s| !s.is_finite()) {
        return Err(Error::DegenerateData("no candidate k has a finite score".into()));
    }
    Ok(ks[sample_log_weights(&scores, rng)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSample {
    pub labels: Vec<usize>,
    pub k: usize,
}

/// Gibbs sampling over centres, labels and `k`.
///
/// One label chain is kept per candidate `k`. Each sweep recomputes `σ²` and
/// `τ²` from the chain's current labels, draws centres and then labels, and
/// finally draws `k`. A label draw that empties a cluster or makes `σ²` zero
/// is rejected and the chain keeps its previous state. More than half of the
/// label draws rejected is a [`Error::GibbsFailure`].
pub fn gibbs_run<F: Scalar, R: Rng + ?Sized>(
    theta: &[F],
    config: &ClusterConfig<F>,
    n_sweeps: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<GibbsSample>> {
    config.validate()?;
    if n_sweeps <= burn_in {
        return Err(Error::InvalidParameter(format!("n_sweeps ({n_sweeps}) must exceed burn_in ({burn_in})")));
    }
    let n = theta.len();
    let mut chains: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for k in config.k_range() {
        let (labels, _) = kmeans_restarts(theta, k, config.n_init, config.max_sweeps, config.seed)?;
        chains.insert(k, labels);
    }

    let mut rejected = 0usize;
    let mut total = 0usize;
    let mut samples = Vec::with_capacity(n_sweeps - burn_in);
    for sweep in 0..n_sweeps {
        for (&k, labels) in chains.iter_mut() {
            total += 1;
            let proposal = within_variance(theta, labels).and_then(|sigma2| {
                let tau2 = variance_ratio(theta, labels, sigma2)?;
                let centers = gibbs_sample_centers(theta, labels, sigma2, tau2, config.kappa_log_for(k, n), rng)?;
                Ok(gibbs_sample_labels(theta, &centers, sigma2, rng))
            });
            match proposal {
                Ok(z) if cluster_sizes(&z, k).iter().all(|&s| s > 0) && within_variance(theta, &z).is_ok() => *labels = z,
                Ok(_) | Err(Error::DegenerateData(_)) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
        if 2 * rejected > total {
            return Err(Error::GibbsFailure { rejected, total });
        }
        let k = gibbs_sample_k(theta, &chains, config.kappa_log, rng)?;
        if sweep >= burn_in {
            samples.push(GibbsSample { labels: chains[&k].clone(), k });
        }
    }
    Ok(samples)
}

/// Adjusted Rand index between two labelings of the same points.
///
/// Two single-cluster labelings count as identical (index 1).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidData(format!("labelings have lengths {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    let (ka, kb) = (num_clusters(a), num_clusters(b));
    let mut table = vec![0u64; ka * kb];
    for (&i, &j) in a.iter().zip(b) {
        table[i * kb + j] += 1;
    }
    let choose2 = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().map(|&m| choose2(m)).sum();
    let sum_a: f64 = (0..ka).map(|i| choose2(table[i * kb..(i + 1) * kb].iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|j| choose2((0..ka).map(|i| table[i * kb + j]).sum())).sum();
    let expected = sum_a * sum_b / choose2(n as u64);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max - expected))
}
