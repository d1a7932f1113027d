//! Gamma distribution CDF and inverse CDF, used as the two-moment surrogate
//! for the null distribution of HSIC statistics.

use crate::{Error, Result, Scalar};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma<F: Scalar>(x: F) -> F {
    if x < F::of(0.5) {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = F::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(F::one() - x);
    }
    let x = x - F::one();
    let mut a = F::of(LANCZOS_COEF[0]);
    let t = x + F::of(LANCZOS_G + 0.5);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += F::of(c) / (x + F::of_usize(i));
    }
    F::of(0.5) * (F::of(2.0) * F::PI()).ln() + (x + F::of(0.5)) * t.ln() - t + a.ln()
}

fn tiny<F: Scalar>() -> F {
    F::min_positive_value() / F::epsilon()
}

/// Series expansion of P(a, x), valid for x < a + 1.
fn lower_series<F: Scalar>(a: F, x: F) -> F {
    let mut ap = a;
    let mut sum = F::one() / a;
    let mut del = sum;
    for _ in 0..10_000 {
        ap += F::one();
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * F::epsilon() {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Continued fraction for Q(a, x), valid for x ≥ a + 1 (modified Lentz).
fn upper_fraction<F: Scalar>(a: F, x: F) -> F {
    let two = F::of(2.0);
    let mut b = x + F::one() - a;
    let mut c = F::one() / tiny::<F>();
    let mut d = F::one() / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = F::of_usize(i);
        let an = -fi * (fi - a);
        b += two;
        d = an * d + b;
        if d.abs() < tiny() {
            d = tiny();
        }
        c = b + an / c;
        if c.abs() < tiny() {
            c = tiny();
        }
        d = F::one() / d;
        let del = d * c;
        h *= del;
        if (del - F::one()).abs() < F::epsilon() {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma(a)).exp() * h
}

/// Regularised lower incomplete gamma function P(a, x).
pub fn regularized_lower_gamma<F: Scalar>(a: F, x: F) -> F {
    if x <= F::zero() {
        return F::zero();
    }
    if x.is_infinite() {
        return F::one();
    }
    if x < a + F::one() {
        lower_series(a, x)
    } else {
        F::one() - upper_fraction(a, x)
    }
}

/// Regularised upper incomplete gamma function Q(a, x) = 1 − P(a, x),
/// evaluated directly in the upper tail to keep small p-values accurate.
pub fn regularized_upper_gamma<F: Scalar>(a: F, x: F) -> F {
    if x <= F::zero() {
        return F::one();
    }
    if x.is_infinite() {
        return F::zero();
    }
    if x < a + F::one() {
        F::one() - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    }
}

/// Gamma distribution in the shape/scale parameterisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDist<F> {
    pub shape: F,
    pub scale: F,
}

impl<F: Scalar> GammaDist<F> {
    pub fn new(shape: F, scale: F) -> Result<Self> {
        if !(shape > F::zero()) || !(scale > F::zero()) || !shape.is_finite() || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma shape and scale must be positive and finite, got ({shape}, {scale})")));
        }
        Ok(Self { shape, scale })
    }

    /// Moment matching: shape = mean²/variance, scale = variance/mean.
    pub fn from_moments(mean: F, variance: F) -> Result<Self> {
        if !(mean > F::zero()) || !(variance > F::zero()) {
            return Err(Error::InvalidParameter(format!("gamma moments must be positive, got mean {mean}, variance {variance}")));
        }
        Self::new(mean * mean / variance, variance / mean)
    }

    pub fn mean(&self) -> F {
        self.shape * self.scale
    }

    pub fn variance(&self) -> F {
        self.shape * self.scale * self.scale
    }

    pub fn cdf(&self, x: F) -> F {
        regularized_lower_gamma(self.shape, x / self.scale)
    }

    /// Survival function 1 − CDF.
    pub fn sf(&self, x: F) -> F {
        regularized_upper_gamma(self.shape, x / self.scale)
    }

    pub fn ln_pdf(&self, x: F) -> F {
        if x <= F::zero() {
            return F::neg_infinity();
        }
        let z = x / self.scale;
        (self.shape - F::one()) * z.ln() - z - ln_gamma(self.shape) - self.scale.ln()
    }

    /// Inverse CDF at `level ∈ (0, 1)`.
    pub fn quantile(&self, level: F) -> Result<F> {
        if !(level > F::zero() && level < F::one()) {
            return Err(Error::InvalidParameter(format!("quantile level must lie in (0,1), got {level}")));
        }
        Ok(standard_gamma_quantile(self.shape, level) * self.scale)
    }
}

/// Quantile of Gamma(shape, 1) by safeguarded Halley iteration on P(a, x) = p.
fn standard_gamma_quantile<F: Scalar>(a: F, p: F) -> F {
    let one = F::one();
    let eps = F::epsilon();

    let mut x = initial_guess(a, p);
    // Bracket [lo, hi] shrinks as iterates are classified by the sign of the residual.
    let mut lo = F::zero();
    let mut hi = F::infinity();
    let gln = ln_gamma(a);
    let a1 = a - one;
    for _ in 0..200 {
        let err = regularized_lower_gamma(a, x) - p;
        if err == F::zero() {
            return x;
        }
        if err < F::zero() {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let ln_density = a1 * x.ln() - x - gln;
        let density = ln_density.exp();
        let mut next = if density > F::zero() && density.is_finite() {
            let t = err / density;
            // Halley correction; the term in brackets is −d ln f / dx.
            let corr = t * (a1 / x - one);
            let step = t / (one - F::of(0.5) * corr.min(one));
            x - step
        } else {
            F::nan()
        };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { F::of(0.5) * (lo + hi) } else { F::of(2.0) * x.max(eps) };
        }
        if (next - x).abs() <= F::of(4.0) * eps * next.abs() {
            return next;
        }
        x = next;
    }
    x
}

fn initial_guess<F: Scalar>(a: F, p: F) -> F {
    let one = F::one();
    if a > one {
        // Wilson–Hilferty transform of the normal quantile.
        let pp = if p < F::of(0.5) { p } else { one - p };
        let t = (F::of(-2.0) * pp.ln()).sqrt();
        let mut z = (F::of(2.30753) + t * F::of(0.27061)) / (one + t * (F::of(0.99229) + t * F::of(0.04481))) - t;
        if p < F::of(0.5) {
            z = -z;
        }
        let nine_a = F::of(9.0) * a;
        let x = a * (one - one / nine_a - z / nine_a.sqrt()).powi(3);
        x.max(F::of(1e-3) * a)
    } else {
        let t = one - a * (F::of(0.253) + a * F::of(0.12));
        if p < t {
            (p / t).powf(one / a)
        } else {
            one - (one - (p - t) / (one - t)).ln()
        }
    }
}

/// The `level`-quantile of the Gamma distribution with the given mean and variance.
pub fn gamma_quantile<F: Scalar>(mean: F, variance: F, level: F) -> Result<F> {
    if !(level > F::zero() && level < F::one()) {
        return Err(Error::InvalidParameter(format!("quantile level must lie in (0,1), got {level}")));
    }
    GammaDist::from_moments(mean, variance)?.quantile(level)
}
