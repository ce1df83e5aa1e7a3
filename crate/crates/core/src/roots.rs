//! Safeguarded Newton iteration with a bisection fallback for monotone scalar
//! equations on a known bracket.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_ITER: usize = 200;

/// Finds a root of `f` in `[lo, hi]`. `f` returns `(value, derivative)` and
/// must change sign over the bracket. Iteration stops once
/// `|value| <= residual_tol` or the bracket has collapsed to rounding level.
pub fn newton_bisect<T, F>(solver: &'static str, mut f: F, lo: T, hi: T, guess: T, residual_tol: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> (T, T),
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a).0;
    if fa.abs() <= residual_tol {
        return Ok(a);
    }
    let fb = f(b).0;
    if fb.abs() <= residual_tol {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::domain(solver, format!("root not bracketed: f({a}) = {fa}, f({b}) = {fb}")));
    }
    let increasing = fb > fa;
    let half = T::lit(0.5);
    let mut x = if guess > a && guess < b { guess } else { (a + b) * half };
    let mut width = b - a;
    let mut best = (x, T::infinity());
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x);
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx.abs() <= residual_tol {
            return Ok(x);
        }
        if (fx < T::zero()) == increasing {
            a = x;
        } else {
            b = x;
        }
        let span = b - a;
        if span <= T::epsilon() * T::lit(4.0) * a.abs().max(b.abs()) {
            return Ok(best.0);
        }
        let newton = x - fx / dfx;
        // Bisect when Newton leaves the bracket or the bracket stalls.
        let stalled = span > width * half;
        width = span;
        x = if dfx != T::zero() && newton.is_finite() && newton > a && newton < b && !stalled {
            newton
        } else {
            (a + b) * half
        };
    }
    Err(Error::NoConvergence { solver, iterations: MAX_ITER, residual: best.1.to_f64_lossy() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root() {
        let r = newton_bisect("cbrt", |x: f64| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 1.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn decreasing_function() {
        let r = newton_bisect("exp", |x: f64| ((-x).exp() - 0.5, -(-x).exp()), 0.0, 10.0, 9.0, 1e-15).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn unbracketed_is_domain_error() {
        let e = newton_bisect("sq", |x: f64| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 0.0, 1e-12);
        assert!(matches!(e, Err(Error::Domain { .. })));
    }

    #[test]
    fn useless_derivative_still_converges_by_bisection() {
        let r = newton_bisect("lin", |x: f64| (x - 0.3, 0.0), 0.0, 1.0, 0.9, 1e-14).unwrap();
        assert!((r - 0.3).abs() < 1e-13);
    }
}
