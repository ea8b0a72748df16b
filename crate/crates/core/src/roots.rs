//! Scalar root-finding primitives used throughout the circuit models.

#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};

/// Bisection on `f` over `[lo, hi]`, assuming `f(lo)` and `f(hi)` have
/// opposite signs. Runs a fixed number of iterations so results are
/// schedule-deterministic.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iterations: usize) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootNotBracketed);
    }
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Damped Newton iteration for a scalar equation `f(x) = 0` with analytic
/// derivative. The step is halved (up to 30 times) whenever it would
/// increase `|f|`. Succeeds when either the residual drops below
/// `residual_tol` or the accepted step shrinks below `step_tol`; the step
/// criterion is what terminates on degenerate (flat) roots where the
/// residual plateaus above any fixed tolerance.
pub fn newton_scalar<F, D>(
    f: F,
    df: D,
    x0: f64,
    residual_tol: f64,
    step_tol: f64,
    max_iter: usize,
) -> Option<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0;
    for _ in 0..max_iter {
        let fx = f(x);
        if !fx.is_finite() {
            return None;
        }
        if fx.abs() <= residual_tol {
            return Some(x);
        }
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let mut step = -fx / d;
        if !step.is_finite() {
            return None;
        }
        let mut x_new = x + step;
        let mut f_new = f(x_new);
        let mut halvings = 0;
        // A NaN trial residual must also trigger halving.
        while (f_new.is_nan() || f_new.abs() > fx.abs()) && halvings < 30 {
            step *= 0.5;
            x_new = x + step;
            f_new = f(x_new);
            halvings += 1;
        }
        x = x_new;
        if step.abs() <= step_tol {
            return Some(x);
        }
    }
    None
}

/// Golden-section minimization of `f` on `[a, b]` to absolute tolerance
/// `tol` in the argument. `f` must be unimodal on the interval.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
