//! Per-observation latent causal parameters for an additive noise model.
//!
//! Each observation gets a scalar `θ_i` that is appended to the cause, so the
//! effect is modelled as a Gaussian process over `[x_i, θ_i]`. The latent
//! vector maximises the GP log-likelihood penalised by `λ·log HSIC(x, θ)`,
//! which pushes `θ` towards independence from the cause.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::kernels::{center_kernel, hsic_gradient_parts, median_heuristic_bandwidth, pairwise_median, rbf_kernel_1d};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::{mean, standardized};
use crate::scg::{scg_maximize, ScgOptions};
use crate::{Error, Result, Scalar};

/// Floor added to HSIC inside the logarithm.
pub const HSIC_FLOOR: f64 = 1e-12;

/// Minimum sample size for [`objective`]; the HSIC null moments need six points.
pub const MIN_OBJECTIVE_N: usize = 6;

/// Minimum sample size for [`fit_latent_params`].
pub const MIN_FIT_N: usize = 10;

const JITTER_RETRIES: usize = 3;
const FIT_RESTARTS: usize = 3;
const INIT_SD: f64 = 0.1;

/// Starting point for the latent optimisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaInit {
    /// Small i.i.d. Gaussian draws from the seed.
    Random,
    /// [`conditional_rank_init`].
    ConditionalRank,
    /// Both of the above; the fit with the larger objective wins.
    #[default]
    Best,
}

/// Kernel bandwidth: an explicit value or the median pairwise distance of the cause.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth<F> {
    Median,
    Fixed(F),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentConfig<F> {
    /// Weight `λ` of the HSIC penalty.
    pub lambda: F,
    /// Number of hidden output dimensions `d`; the likelihood uses `d + 1`.
    pub latent_dim: usize,
    /// Noise precision `β`; the GP covariance gets `β⁻¹ I` added.
    pub beta: F,
    pub kernel_bandwidth: Bandwidth<F>,
    /// Precision of a zero-mean Gaussian prior on the centred θ; 0 disables it.
    pub theta_prior_precision: F,
    pub init: ThetaInit,
    pub max_iters: usize,
    pub tol: F,
    pub seed: u64,
}

impl<F: Scalar> Default for LatentConfig<F> {
    fn default() -> Self {
        Self {
            lambda: F::of(50.0),
            latent_dim: 1,
            beta: F::of(100.0),
            kernel_bandwidth: Bandwidth::Median,
            theta_prior_precision: F::one(),
            init: ThetaInit::Best,
            max_iters: 300,
            tol: F::of(1e-6),
            seed: 0,
        }
    }
}

impl<F: Scalar> LatentConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= F::zero()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.latent_dim < 1 {
            return Err(Error::InvalidParameter("latent_dim must be >= 1".into()));
        }
        if !(self.beta > F::zero()) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.theta_prior_precision >= F::zero()) {
            return Err(Error::InvalidParameter(format!("theta_prior_precision must be >= 0, got {}", self.theta_prior_precision)));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::InvalidParameter("tol must be > 0".into()));
        }
        if let Bandwidth::Fixed(h) = self.kernel_bandwidth {
            if !(h > F::zero()) {
                return Err(Error::InvalidParameter(format!("bandwidth must be > 0, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentFit<F> {
    pub theta: Vec<F>,
    pub objective_trace: Vec<F>,
    pub final_objective: F,
    pub hsic_x_theta: F,
    /// HSIC between the cause and the starting point of the optimisation.
    pub initial_hsic_x_theta: F,
    pub converged: bool,
    pub config: LatentConfig<F>,
}

/// Factorises an SPD matrix, adding diagonal jitter when needed.
///
/// The first retry adds `1e-6 × mean diagonal`, growing tenfold each time.
pub fn factor_with_jitter<F: Scalar>(gram: &Matrix<F>) -> Result<Cholesky<F>> {
    if let Some(ch) = Cholesky::factor(gram) {
        return Ok(ch);
    }
    let n = gram.rows();
    let mean_diag = gram.trace() / F::of_usize(n.max(1));
    let mut jitter = F::of(1e-6) * mean_diag.abs().max(F::min_positive_value());
    for _ in 0..JITTER_RETRIES {
        if let Some(ch) = Cholesky::factor(&gram.add_diagonal(jitter)) {
            log::debug!("cholesky needed jitter {jitter}");
            return Ok(ch);
        }
        jitter *= F::of(10.0);
    }
    Err(Error::numerical("covariance matrix is not positive definite after jitter escalation"))
}

/// Gaussian log-likelihood
/// `−(D n/2) log 2π − (D/2) log|K| − ½ yᵀK⁻¹y` with `D = out_dim`.
pub fn gp_log_likelihood<F: Scalar>(gram: &Matrix<F>, y: &[F], out_dim: usize) -> Result<F> {
    let n = gram.rows();
    if !gram.is_square() || y.len() != n {
        return Err(Error::InvalidParameter(format!("gram is {}x{}, y has {}", gram.rows(), gram.cols(), y.len())));
    }
    let ch = factor_with_jitter(gram)?;
    Ok(likelihood_from_factor(&ch, y, out_dim))
}

fn likelihood_from_factor<F: Scalar>(ch: &Cholesky<F>, y: &[F], out_dim: usize) -> F {
    let n = F::of_usize(ch.dim());
    let d = F::of_usize(out_dim);
    let half = F::of(0.5);
    let alpha = ch.solve(y);
    let quad: F = y.iter().zip(&alpha).map(|(&a, &b)| a * b).sum();
    -half * d * n * (F::of(2.0) * F::PI()).ln() - half * d * ch.log_det() - half * quad
}

/// Likelihood of `y` under covariance `K + β⁻¹ I` with `d` output dimensions.
pub fn marginal_projection_likelihood<F: Scalar>(k: &Matrix<F>, y: &[F], d: usize, beta: F) -> Result<F> {
    if !(beta > F::zero()) {
        return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    gp_log_likelihood(&k.add_diagonal(F::one() / beta), y, d)
}

/// Precomputed, θ-independent pieces of the penalised objective.
struct ObjectiveParts<F> {
    n: usize,
    y: Vec<F>,
    /// Squared cause differences `(x_i − x_j)²`.
    dx2: Matrix<F>,
    /// `Some` for a fixed GP bandwidth; `None` for the median over `[x, θ]`.
    fixed_bandwidth: Option<F>,
    /// Centred RBF kernel on the cause with its median bandwidth.
    kx_centered: Matrix<F>,
    noise: F,
    out_dim: usize,
    lambda: F,
    prior_precision: F,
}

/// Everything the gradient needs from one evaluation.
struct Evaluation<F> {
    value: F,
    likelihood: F,
    hsic: F,
    chol: Cholesky<F>,
    /// RBF kernel on `[x, θ]`, without the noise term.
    k_gp: Matrix<F>,
    gp_bandwidth: F,
    /// Pairs whose distance defines a median GP bandwidth.
    gp_support: Vec<(usize, usize, F)>,
    /// RBF kernel on θ inside HSIC; its bandwidth is the median of `|θ_i − θ_j|`.
    l_theta: Matrix<F>,
    theta_bandwidth: F,
    theta_support: Vec<(usize, usize, F)>,
}

impl<F: Scalar> ObjectiveParts<F> {
    fn new(x: &[F], y: &[F], config: &LatentConfig<F>) -> Result<Self> {
        config.validate()?;
        let n = x.len();
        if y.len() != n {
            return Err(Error::InvalidParameter(format!("|x| = {} but |y| = {}", n, y.len())));
        }
        if n < MIN_OBJECTIVE_N {
            return Err(Error::SampleTooSmall { n, min: MIN_OBJECTIVE_N });
        }
        let hx = median_heuristic_bandwidth(x)?;
        let fixed_bandwidth = match config.kernel_bandwidth {
            Bandwidth::Median => None,
            Bandwidth::Fixed(h) => Some(h),
        };
        let dx2 = Matrix::from_fn(n, n, |i, j| (x[i] - x[j]) * (x[i] - x[j]));
        let kx_centered = center_kernel(&rbf_kernel_1d(x, hx)?);
        Ok(Self {
            n,
            y: y.to_vec(),
            dx2,
            fixed_bandwidth,
            kx_centered,
            noise: F::one() / config.beta,
            out_dim: config.latent_dim + 1,
            lambda: config.lambda,
            prior_precision: config.theta_prior_precision,
        })
    }

    fn check_theta(&self, theta: &[F]) -> Result<()> {
        if theta.len() != self.n {
            return Err(Error::InvalidParameter(format!("|theta| = {} but n = {}", theta.len(), self.n)));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::numerical("theta has non-finite entries"));
        }
        Ok(())
    }

    fn r2(&self, theta: &[F], i: usize, j: usize) -> F {
        let dt = theta[i] - theta[j];
        self.dx2[(i, j)] + dt * dt
    }

    fn hsic_value(&self, l: &Matrix<F>) -> F {
        let nf = F::of_usize(self.n);
        (self.kx_centered.frobenius_dot(l) / (nf * nf)).max(F::zero())
    }

    /// Gaussian log prior on θ − θ̄, up to a constant; shift-invariant.
    fn log_prior(&self, theta: &[F]) -> F {
        let m = mean(theta);
        -F::of(0.5) * self.prior_precision * theta.iter().map(|&t| (t - m) * (t - m)).sum::<F>()
    }

    fn evaluate(&self, theta: &[F]) -> Result<Evaluation<F>> {
        self.check_theta(theta)?;
        let n = self.n;
        let (gp_bandwidth, gp_support) = match self.fixed_bandwidth {
            Some(h) => (h, Vec::new()),
            None => {
                let m = pairwise_median(n, |i, j| self.r2(theta, i, j).sqrt())
                    .ok_or_else(|| Error::numerical("all augmented inputs coincide"))?;
                (m.value, m.pairs)
            }
        };
        let gp_denom = F::of(2.0) * gp_bandwidth * gp_bandwidth;
        let k_gp = Matrix::from_fn(n, n, |i, j| (-self.r2(theta, i, j) / gp_denom).exp());
        let chol = factor_with_jitter(&k_gp.add_diagonal(self.noise))?;
        let likelihood = likelihood_from_factor(&chol, &self.y, self.out_dim);

        let (l_theta, hsic, theta_bandwidth, theta_support) = match pairwise_median(n, |i, j| (theta[i] - theta[j]).abs()) {
            Some(m) => {
                let l = rbf_kernel_1d(theta, m.value)?.values().clone();
                let v = self.hsic_value(&l);
                (l, v, m.value, m.pairs)
            }
            // Constant θ: the centred θ kernel vanishes.
            None => (Matrix::from_fn(n, n, |_, _| F::one()), F::zero(), F::zero(), Vec::new()),
        };
        let value = likelihood - self.lambda * (hsic + F::of(HSIC_FLOOR)).ln() + self.log_prior(theta);
        Ok(Evaluation { value, likelihood, hsic, chol, k_gp, gp_bandwidth, gp_support, l_theta, theta_bandwidth, theta_support })
    }

    fn gradient(&self, theta: &[F], ev: &Evaluation<F>) -> Vec<F> {
        let n = self.n;
        let half = F::of(0.5);
        let two = F::of(2.0);
        let kinv = ev.chol.inverse();
        let alpha = ev.chol.solve(&self.y);
        let d = F::of_usize(self.out_dim);
        let h = ev.gp_bandwidth;
        let h2 = h * h;

        // ∂L/∂K̃ = −(D/2) K̃⁻¹ + ½ ααᵀ, contracted with ∂K̃_ij/∂θ_i at fixed
        // bandwidth; ∂L/∂h collects the bandwidth dependence.
        let mut dl_dh = F::zero();
        let mut grad: Vec<F> = (0..n)
            .map(|i| {
                let mut s = F::zero();
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let w = -half * d * kinv[(i, j)] + half * alpha[i] * alpha[j];
                    let kij = ev.k_gp[(i, j)];
                    s += two * w * kij * (theta[j] - theta[i]) / h2;
                    dl_dh += w * kij * self.r2(theta, i, j) / (h2 * h);
                }
                s
            })
            .collect();
        // The median bandwidth moves with the distance of its support pairs.
        for &(a, b, w) in &ev.gp_support {
            let r = self.r2(theta, a, b).sqrt();
            if r > F::zero() {
                let dr = w * (theta[a] - theta[b]) / r;
                grad[a] += dl_dh * dr;
                grad[b] -= dl_dh * dr;
            }
        }

        if self.lambda > F::zero() && ev.theta_bandwidth > F::zero() {
            let h = ev.theta_bandwidth;
            let nf = F::of_usize(n);
            let mut dh = hsic_gradient_parts(&self.kx_centered, &ev.l_theta, theta, h);
            let mut dhsic_dh = F::zero();
            for i in 0..n {
                for j in 0..n {
                    let dt = theta[i] - theta[j];
                    dhsic_dh += self.kx_centered[(i, j)] * ev.l_theta[(i, j)] * dt * dt;
                }
            }
            dhsic_dh /= nf * nf * h * h * h;
            for &(a, b, w) in &ev.theta_support {
                let dt = theta[a] - theta[b];
                if dt != F::zero() {
                    let dr = w * dt.signum();
                    dh[a] += dhsic_dh * dr;
                    dh[b] -= dhsic_dh * dr;
                }
            }
            let denom = ev.hsic + F::of(HSIC_FLOOR);
            for (g, dhi) in grad.iter_mut().zip(&dh) {
                *g -= self.lambda * *dhi / denom;
            }
        }
        let m = mean(theta);
        for (g, &t) in grad.iter_mut().zip(theta) {
            *g -= self.prior_precision * (t - m);
        }
        grad
    }
}

/// Penalised objective `J(θ) = L(θ) − λ log(HSIC(x, θ) + ε)`.
pub fn objective<F: Scalar>(theta: &[F], x: &[F], y: &[F], config: &LatentConfig<F>) -> Result<F> {
    let parts = ObjectiveParts::new(x, y, config)?;
    Ok(parts.evaluate(theta)?.value)
}

/// The likelihood part of [`objective`] alone.
pub fn objective_likelihood<F: Scalar>(theta: &[F], x: &[F], y: &[F], config: &LatentConfig<F>) -> Result<F> {
    let parts = ObjectiveParts::new(x, y, config)?;
    Ok(parts.evaluate(theta)?.likelihood)
}

/// HSIC between the cause and θ with the bandwidths the objective uses.
pub fn objective_hsic<F: Scalar>(theta: &[F], x: &[F], config: &LatentConfig<F>) -> Result<F> {
    let parts = ObjectiveParts::new(x, x, config)?;
    Ok(parts.evaluate(theta)?.hsic)
}

/// Analytic gradient of [`objective`] with respect to θ.
pub fn objective_gradient<F: Scalar>(theta: &[F], x: &[F], y: &[F], config: &LatentConfig<F>) -> Result<Vec<F>> {
    let parts = ObjectiveParts::new(x, y, config)?;
    let ev = parts.evaluate(theta)?;
    Ok(parts.gradient(theta, &ev))
}

fn initial_theta<F: Scalar>(n: usize, seed: u64) -> Vec<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_SD).expect("valid normal");
    (0..n).map(|_| F::of(normal.sample(&mut rng))).collect()
}

/// Estimates `θ̂ = argmax J(θ)` by scaled conjugate gradients.
///
/// `x` and `y` are standardised internally. A numerical failure triggers up
/// to three restarts from fresh seeded initialisations.
pub fn fit_latent_params<F: Scalar>(x: &[F], y: &[F], config: &LatentConfig<F>) -> Result<LatentFit<F>> {
    fit_latent_params_inner(x, y, None, config)
}

/// Like [`fit_latent_params`] but starts the optimiser at `init`.
pub fn fit_latent_params_from<F: Scalar>(x: &[F], y: &[F], init: &[F], config: &LatentConfig<F>) -> Result<LatentFit<F>> {
    if init.len() != x.len() {
        return Err(Error::InvalidParameter(format!("|init| = {} but n = {}", init.len(), x.len())));
    }
    fit_latent_params_inner(x, y, Some(init), config)
}

fn fit_latent_params_inner<F: Scalar>(x: &[F], y: &[F], start: Option<&[F]>, config: &LatentConfig<F>) -> Result<LatentFit<F>> {
    config.validate()?;
    let n = x.len();
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("|x| = {} but |y| = {}", n, y.len())));
    }
    if n < MIN_FIT_N {
        return Err(Error::SampleTooSmall { n, min: MIN_FIT_N });
    }
    let xs = standardized(x, "x")?;
    let ys = standardized(y, "y")?;
    let parts = ObjectiveParts::new(&xs, &ys, config)?;

    let starts = match (start, config.init) {
        (Some(s), _) => vec![s.to_vec()],
        (None, ThetaInit::Random) => vec![initial_theta(n, config.seed)],
        (None, ThetaInit::ConditionalRank) => vec![conditional_rank_init(&xs, &ys)],
        (None, ThetaInit::Best) => vec![conditional_rank_init(&xs, &ys), initial_theta(n, config.seed)],
    };
    let mut best: Option<LatentFit<F>> = None;
    for init in starts {
        let fit = optimize_with_restarts(&parts, init, config)?;
        if best.as_ref().is_none_or(|b| fit.final_objective > b.final_objective) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Runs SCG from `init`; a numerical failure retries from fresh seeded draws.
fn optimize_with_restarts<F: Scalar>(parts: &ObjectiveParts<F>, init: Vec<F>, config: &LatentConfig<F>) -> Result<LatentFit<F>> {
    let mut last_err = None;
    let mut init = init;
    for attempt in 0..=FIT_RESTARTS {
        if attempt > 0 {
            let seed = config.seed.wrapping_add(attempt as u64 * 0x9E37_79B9_7F4A_7C15);
            init = initial_theta(parts.n, seed);
        }
        let initial_hsic = match parts.evaluate(&init) {
            Ok(ev) => ev.hsic,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let f = |t: &[F]| parts.evaluate(t).map(|ev| ev.value);
        let g = |t: &[F]| {
            let ev = parts.evaluate(t)?;
            Ok(parts.gradient(t, &ev))
        };
        match scg_maximize(f, g, &init, ScgOptions { max_iters: config.max_iters, tol: config.tol }) {
            Ok(out) => {
                let ev = parts.evaluate(&out.argmax)?;
                return Ok(LatentFit {
                    final_objective: ev.value,
                    hsic_x_theta: ev.hsic,
                    initial_hsic_x_theta: initial_hsic,
                    theta: out.argmax,
                    objective_trace: out.trace,
                    converged: out.converged,
                    config: config.clone(),
                });
            }
            Err(e @ Error::NumericalFailure { .. }) => {
                log::warn!("latent fit attempt {attempt} failed: {e}");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::EstimationFailure {
        attempts: FIT_RESTARTS + 1,
        last: Box::new(last_err.unwrap_or_else(|| Error::numerical("no attempt ran"))),
    })
}

/// Rank of each `y_i` among the effects of its nearest causes, centred on 0.
///
/// Within a neighbourhood of `x` the rank is uniform whatever `x` is, so the
/// start is nearly independent of the cause while still ordering points by
/// their offset from the local bulk.
pub fn conditional_rank_init<F: Scalar>(x: &[F], y: &[F]) -> Vec<F> {
    let n = x.len();
    let m = (n / 5).clamp(5, 50).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    (0..n)
        .map(|i| {
            idx.sort_by(|&a, &b| {
                (x[a] - x[i]).abs().partial_cmp(&(x[b] - x[i]).abs()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            let below = idx[..m].iter().filter(|&&j| y[j] < y[i]).count();
            F::of((below as f64 + 0.5) / m as f64 - 0.5)
        })
        .collect()
}
