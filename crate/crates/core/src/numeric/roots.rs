use crate::error::{Error, Result};

/// Solves `f(x) = target` for an increasing `f` on `[lo, ∞)`.
///
/// `f` returns the value and its derivative. Newton steps are taken when they
/// stay inside the current bracket, bisection otherwise. The upper end is
/// doubled until it brackets the target.
pub fn solve_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(target.is_finite() && lo.is_finite() && hi > lo) {
        return Err(Error::Domain(format!("bracket [{lo}, {hi}] for target {target}")));
    }
    let mut doublings = 0;
    while f(hi).0 < target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 || !hi.is_finite() {
            return Err(Error::RootFinding(format!("cannot bracket target {target}")));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        let r = fx - target;
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - r / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootFinding(format!("no convergence for target {target}")))
}
