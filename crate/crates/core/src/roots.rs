//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Safeguarded Newton iteration on a sign-changing bracket `[lo, hi]`.
///
/// `f` returns the value and derivative. A Newton step that leaves the
/// current bracket, or fails to halve it, is replaced by bisection.
pub fn newton_bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain(format!("root not bracketed on [{lo}, {hi}]")));
    }
    let rising = fhi > 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut last_width = hi - lo;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            hi = x;
        } else {
            lo = x;
        }
        let width = hi - lo;
        if width <= xtol * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = x - fx / dfx;
        let ok = dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi && width < 0.75 * last_width;
        last_width = width;
        let next = if ok { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= xtol * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NumericFailure { what: "newton_bisect".into(), estimate: hi - lo })
}

/// Plain bisection; used by tests and as a last resort.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let flo = f(lo);
    if flo.signum() == f(hi).signum() {
        return Err(Error::Domain(format!("root not bracketed on [{lo}, {hi}]")));
    }
    let rising = flo < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol * mid.abs().max(f64::MIN_POSITIVE) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if (f(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
