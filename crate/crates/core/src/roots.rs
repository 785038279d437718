//! Bracketing and bisection for monotone scalar maps.

use crate::error::{Error, Result};

/// Maximum number of geometric bracket expansions before giving up.
pub const MAX_EXPANSIONS: usize = 1000;

/// Grows `[center - width, center + width]` geometrically until
/// `below(lo)` is true and `below(hi)` is false, where `below` is a
/// monotone predicate (true on a left half-line).
pub fn grow_bracket<P: Fn(f64) -> bool>(below: P, center: f64, width: f64) -> Result<(f64, f64)> {
    let mut w = if width > 0.0 && width.is_finite() { width } else { 1.0 };
    let mut lo = center - w;
    let mut hi = center + w;
    let mut expansions = 0;
    while !below(lo) || below(hi) {
        if expansions >= MAX_EXPANSIONS || !w.is_finite() {
            return Err(Error::numeric(
                "bracket growth exceeded the expansion limit",
                center,
            ));
        }
        w *= 2.0;
        if !below(lo) {
            lo = center - w;
        }
        if below(hi) {
            hi = center + w;
        }
        expansions += 1;
    }
    Ok((lo, hi))
}

/// Bisects a bracket `[lo, hi]` of a monotone predicate (`below(lo)` true,
/// `below(hi)` false) down to `width`. Returns the final `(lo, hi)`.
pub fn bisect<P: Fn(f64) -> bool>(below: P, mut lo: f64, mut hi: f64, width: f64, max_iter: usize) -> (f64, f64) {
    for _ in 0..max_iter {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Safeguarded Newton iteration for an increasing function `g` with
/// derivative `dg` on a bracket where `g(lo) < 0 <= g(hi)`.
pub fn newton_bisect<G, D>(g: G, dg: D, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = dg(x);
        let mut next = x - gx / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let scale = next.abs().max(1e-300);
        if (next - x).abs() <= rel_tol * scale || hi - lo <= rel_tol * scale {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_then_bisect_cube_root() {
        let below = |x: f64| x * x * x < 10.0;
        let (lo, hi) = grow_bracket(below, 0.0, 0.5).unwrap();
        assert!(below(lo) && !below(hi));
        let (lo, hi) = bisect(below, lo, hi, 1e-13, 200);
        assert!((hi - 10f64.cbrt()).abs() < 1e-12 && hi >= lo);
    }

    #[test]
    fn unbounded_predicate_fails() {
        assert!(grow_bracket(|_| true, 0.0, 1.0).unwrap_err().is_numeric());
    }

    #[test]
    fn newton_finds_root() {
        let r = newton_bisect(|x| x.exp() - 3.0, f64::exp, -5.0, 5.0, 1e-15);
        assert!((r - 3f64.ln()).abs() < 1e-14);
    }
}
