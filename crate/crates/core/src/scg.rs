//! Scaled conjugate gradient (Møller, 1993) for maximising a smooth function.
//!
//! The step length comes from a Levenberg–Marquardt style scaled estimate of
//! the curvature along the search direction, so no line search is needed.
//! Only steps that increase the objective are accepted, which makes the
//! recorded trace monotone.

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct ScgOptions<F> {
    pub max_iters: usize,
    /// Stop once an accepted step changes the objective by less than this,
    /// or the gradient norm falls below it.
    pub tol: F,
}

#[derive(Debug, Clone)]
pub struct ScgOutcome<F> {
    pub argmax: Vec<F>,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&u, &v)| u * v).sum()
}

fn axpy<F: Scalar>(x: &[F], alpha: F, d: &[F]) -> Vec<F> {
    x.iter().zip(d).map(|(&a, &b)| a + alpha * b).collect()
}

fn finite_value<F: Scalar>(v: F, iteration: usize) -> Result<F> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalFailure { reason: "objective is not finite".into(), iteration: Some(iteration) })
    }
}

fn finite_grad<F: Scalar>(g: Vec<F>, iteration: usize) -> Result<Vec<F>> {
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NumericalFailure { reason: "gradient is not finite".into(), iteration: Some(iteration) })
    }
}

/// Maximises `f` starting from `init`, using `g` for its gradient.
///
/// Internally minimises `-f`; the returned trace is in terms of `f`.
pub fn scg_maximize<F, Fo, Go>(mut f: Fo, mut g: Go, init: &[F], opts: ScgOptions<F>) -> Result<ScgOutcome<F>>
where
    F: Scalar,
    Fo: FnMut(&[F]) -> Result<F>,
    Go: FnMut(&[F]) -> Result<Vec<F>>,
{
    let nparams = init.len();
    let sigma0 = F::of(1e-4);
    let beta_min = F::of(1e-15);
    let beta_max = F::of(1e100);

    // Work with the minimisation problem e(x) = -f(x).
    let mut grad = |x: &[F], it: usize| -> Result<Vec<F>> { finite_grad(g(x)?.into_iter().map(|v| -v).collect(), it) };

    let mut x = init.to_vec();
    let mut fold = -finite_value(f(&x)?, 0)?;
    let mut gradnew = grad(&x, 0)?;
    let mut gradold = gradnew.clone();
    let mut d: Vec<F> = gradnew.iter().map(|&v| -v).collect();
    let mut trace = vec![-fold];

    let mut success = true;
    let mut nsuccess = 0usize;
    let mut beta = F::one();
    let mut mu = F::zero();
    let mut kappa = F::zero();
    let mut theta = F::zero();

    if dot(&gradnew, &gradnew).sqrt() < opts.tol {
        return Ok(ScgOutcome { argmax: x, trace, iterations: 0, converged: true });
    }

    for it in 1..=opts.max_iters {
        if success {
            mu = dot(&d, &gradnew);
            if mu >= F::zero() {
                d = gradnew.iter().map(|&v| -v).collect();
                mu = dot(&d, &gradnew);
            }
            kappa = dot(&d, &d);
            if kappa < F::epsilon() {
                return Ok(ScgOutcome { argmax: x, trace, iterations: it, converged: true });
            }
            let sigma = sigma0 / kappa.sqrt();
            let xplus = axpy(&x, sigma, &d);
            let gplus = grad(&xplus, it)?;
            theta = d.iter().zip(gplus.iter().zip(&gradnew)).map(|(&di, (&a, &b))| di * (a - b)).sum::<F>() / sigma;
        }

        // Scale the curvature estimate to keep it positive.
        let mut delta = theta + beta * kappa;
        if delta <= F::zero() {
            delta = beta * kappa;
            beta -= theta / kappa;
        }
        let alpha = -mu / delta;

        let xnew = axpy(&x, alpha, &d);
        // Trial points may leave the region where the objective is defined;
        // treat that as a failed step rather than an error.
        let fnew = match f(&xnew) {
            Ok(v) if v.is_finite() => -v,
            Ok(_) | Err(Error::NumericalFailure { .. }) => F::infinity(),
            Err(e) => return Err(e),
        };

        let comparison = F::of(2.0) * (fnew - fold) / (alpha * mu);
        let accepted = comparison >= F::zero() && fnew <= fold;
        if accepted {
            success = true;
            nsuccess += 1;
            x = xnew;
        } else {
            success = false;
        }

        if success {
            let change = (fnew - fold).abs();
            trace.push(-fnew);
            fold = fnew;
            gradold = gradnew;
            gradnew = grad(&x, it)?;
            if change < opts.tol || dot(&gradnew, &gradnew).sqrt() < opts.tol {
                return Ok(ScgOutcome { argmax: x, trace, iterations: it, converged: true });
            }
        }

        if !(comparison >= F::of(0.25)) {
            beta = (F::of(4.0) * beta).min(beta_max);
        }
        if comparison > F::of(0.75) {
            beta = (F::of(0.5) * beta).max(beta_min);
        }
        if beta >= beta_max {
            // No productive step can be found along any direction.
            return Ok(ScgOutcome { argmax: x, trace, iterations: it, converged: false });
        }

        if nsuccess == nparams {
            d = gradnew.iter().map(|&v| -v).collect();
            nsuccess = 0;
        } else if success {
            let gamma = gradold.iter().zip(&gradnew).map(|(&a, &b)| (a - b) * b).sum::<F>() / mu;
            d = d.iter().zip(&gradnew).map(|(&di, &gi)| gamma * di - gi).collect();
        }
    }
    Ok(ScgOutcome { argmax: x, trace, iterations: opts.max_iters, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Cholesky, Matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_bowl() {
        let a = [1.5, -2.0, 0.25, 3.0];
        let f = |x: &[f64]| Ok(-x.iter().zip(&a).map(|(u, v)| (u - v).powi(2)).sum::<f64>());
        let g = |x: &[f64]| Ok(x.iter().zip(&a).map(|(u, v)| -2.0 * (u - v)).collect());
        for init in [[0.0; 4], [10.0, -10.0, 5.0, 1.0]] {
            let out = scg_maximize(f, g, &init, ScgOptions { max_iters: 200, tol: 1e-14 }).unwrap();
            for (u, v) in out.argmax.iter().zip(&a) {
                assert!((u - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn spd_quadratic_matches_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [3, 10, 25] {
            let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = m.matmul(&m.transpose()).add_diagonal(0.5);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = |x: &[f64]| {
                let ax = a.matvec(x);
                Ok(-0.5 * x.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>() + x.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>())
            };
            let g = |x: &[f64]| Ok(a.matvec(x).iter().zip(&b).map(|(ax, bi)| bi - ax).collect());
            let out = scg_maximize(f, g, &vec![0.0; n], ScgOptions { max_iters: 5000, tol: 1e-13 }).unwrap();
            let want = Cholesky::factor(&a).unwrap().solve(&b);
            for (u, v) in out.argmax.iter().zip(&want) {
                assert!((u - v).abs() < 1e-6, "n={n}: {u} vs {v}");
            }
            assert!(out.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        }
    }

    #[test]
    fn non_finite_objective_reports_iteration() {
        let f = |_: &[f64]| Ok(f64::NAN);
        let g = |x: &[f64]| Ok(vec![1.0; x.len()]);
        let err = scg_maximize(f, g, &[0.0], ScgOptions { max_iters: 10, tol: 1e-8 }).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { iteration: Some(0), .. }));
    }
}
