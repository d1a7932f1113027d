//! The floating-point abstraction every numerical routine is written against.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

use crate::{Error, Result};

/// Real scalar used by the kernel, likelihood and clustering code.
///
/// Implemented for `f32` and `f64`. Randomness is always drawn in `f64` and
/// converted, so generic code never needs distribution bounds on `Self`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values that do not fit,
    /// which never happens for the finite constants used in this crate.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn mean<F: Scalar>(v: &[F]) -> F {
    v.iter().copied().sum::<F>() / F::of_usize(v.len())
}

/// Population variance (1/n normalisation).
pub(crate) fn variance<F: Scalar>(v: &[F]) -> F {
    let m = mean(v);
    v.iter().map(|&a| (a - m) * (a - m)).sum::<F>() / F::of_usize(v.len())
}

/// Zero mean, unit variance (1/n normalisation).
pub(crate) fn standardized<F: Scalar>(v: &[F], what: &str) -> Result<Vec<F>> {
    if v.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidData(format!("{what} has non-finite values")));
    }
    let m = mean(v);
    let sd = variance(v).sqrt();
    if !(sd > F::zero()) {
        return Err(Error::DegenerateData(format!("{what} has zero variance")));
    }
    Ok(v.iter().map(|&a| (a - m) / sd).collect())
}

/// `log(sum(exp(v)))` without overflow.
pub fn log_sum_exp<F: Scalar>(v: &[F]) -> F {
    let max = v.iter().copied().fold(F::neg_infinity(), F::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|&a| (a - max).exp()).sum::<F>().ln()
}
