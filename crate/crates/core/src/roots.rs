//! Derivative-free root bracketing for monotone objectives.

/// Bisection on a bracket where `f(lo)` and `f(hi)` do not share a sign.
/// Returns the midpoint of the final interval once it is narrower than `tol`.
pub(crate) fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Widens `[lo, hi]` geometrically about its midpoint until `f` changes sign
/// across it, then bisects.
pub(crate) fn bracket_and_bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    for _ in 0..16 {
        let (a, b) = (f(lo), f(hi));
        if a.is_nan() || b.is_nan() {
            return None;
        }
        if a.signum() != b.signum() || a == 0.0 || b == 0.0 {
            return bisect(f, lo, hi, tol);
        }
        let mid = 0.5 * (lo + hi);
        let half = hi - lo;
        lo = mid - half;
        hi = mid + half;
    }
    None
}
