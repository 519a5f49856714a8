//! One-dimensional search routines shared by the pricing engine and the
//! reference oracle.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a concave function on `[lo, hi]`.
pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    if hi <= lo {
        let x = 0.5 * (lo + hi);
        return (x, f(x));
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while hi - lo > tol && iter < 400 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iter += 1;
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    let mut best = (xm, fm);
    if f1 > best.1 {
        best = (x1, f1);
    }
    if f2 > best.1 {
        best = (x2, f2);
    }
    best
}

/// Coarse scan followed by golden-section refinement around the best point.
/// The scan guards against artifacts of piecewise interpolation; the
/// refinement assumes local concavity.
pub(crate) fn scan_then_golden<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const SCAN_POINTS: usize = 33;
    if hi <= lo {
        let x = 0.5 * (lo + hi);
        return (x, f(x));
    }
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    for i in 0..SCAN_POINTS {
        let x = lo + step * i as f64;
        let fx = f(x);
        if fx > best_f {
            best_f = fx;
            best_i = i;
        }
    }
    let seg_lo = if best_i == 0 {
        lo
    } else {
        lo + step * (best_i - 1) as f64
    };
    let seg_hi = if best_i == SCAN_POINTS - 1 {
        hi
    } else {
        lo + step * (best_i + 1) as f64
    };
    let (x, fx) = golden_section_max(f, seg_lo, seg_hi, tol);
    if fx >= best_f {
        (x, fx)
    } else {
        (lo + step * best_i as f64, best_f)
    }
}

/// Maximization on an interval that may be unbounded on either side: start
/// from a unit window and widen geometrically while the maximizer presses
/// against an artificial edge.
pub(crate) fn maximize_on_interval<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    if lo.is_finite() && hi.is_finite() {
        return scan_then_golden(f, lo, hi, tol);
    }
    let mut span = 1.0;
    loop {
        let blo = if lo.is_finite() { lo } else { -span };
        let bhi = if hi.is_finite() { hi } else { span };
        let (x, fx) = scan_then_golden(f, blo, bhi, tol);
        let width = bhi - blo;
        let pressed_left = !lo.is_finite() && x - blo <= 0.01 * width;
        let pressed_right = !hi.is_finite() && bhi - x <= 0.01 * width;
        if (!pressed_left && !pressed_right) || span >= 1e12 {
            if span >= 1e12 {
                log::warn!("delta search widened to {span:e} without interior maximum");
            }
            return (x, fx);
        }
        span *= 8.0;
    }
}

/// Smallest `w` with `f(w) >= target` on an increasing `f`, located by
/// bisection to absolute tolerance `tol`. Expands the initial bracket a few
/// times before giving up.
pub(crate) fn bisect_min_wealth<F: Fn(f64) -> f64>(
    f: &F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let mut guard = 0;
    while f_hi < target {
        let span = (hi - lo).max(1.0);
        hi += span;
        f_hi = f(hi);
        guard += 1;
        if guard > 60 {
            return Err(Error::NoBracket {
                lo,
                hi,
                phi_lo: f_lo,
                phi_hi: f_hi,
                target,
            });
        }
    }
    while f_lo >= target {
        let span = (hi - lo).max(1.0);
        lo -= span;
        f_lo = f(lo);
        guard += 1;
        if guard > 60 {
            return Err(Error::NoBracket {
                lo,
                hi,
                phi_lo: f_lo,
                phi_hi: f_hi,
                target,
            });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let f = |x: f64| -(x - 0.3).powi(2);
        let (x, _) = golden_section_max(&f, -5.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn scan_handles_boundary_maximum() {
        let f = |x: f64| x;
        let (x, fx) = scan_then_golden(&f, -1.0, 2.0, 1e-10);
        assert!((x - 2.0).abs() < 1e-8);
        assert!((fx - 2.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_search_expands_to_distant_peak() {
        let f = |x: f64| -(x - 40.0).powi(2);
        let (x, _) = maximize_on_interval(&f, f64::NEG_INFINITY, f64::INFINITY, 1e-10);
        assert!((x - 40.0).abs() < 1e-7);
    }

    #[test]
    fn bisection_finds_threshold_point() {
        let f = |w: f64| w.tanh();
        let w = bisect_min_wealth(&f, 0.5f64.tanh(), -4.0, 4.0, 1e-10).unwrap();
        assert!((w - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bisection_reports_missing_bracket() {
        let f = |_: f64| 0.0;
        assert!(bisect_min_wealth(&f, 1.0, 0.0, 1.0, 1e-8).is_err());
    }
}
