//! Scalar search helpers: golden-section extremum search and monotone
//! predicate bisection. Both operate on a fixed bracket with absolute width
//! tolerances; callers own bracket construction.

use crate::tol;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal function on [lo, hi]. Returns (argmax, max). The
/// final answer also scans the bracket endpoints, so boundary maxima are
/// exact even when the interior probes never improve on them.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    debug_assert!(lo <= hi);
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while (b - a) > tol::GOLDEN && iters < tol::GOLDEN_CAP {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iters += 1;
    }
    let xm = 0.5 * (a + b);
    let mut best = (xm, f(xm));
    for (x, v) in [(lo, f(lo)), (hi, f(hi)), (x1, f1), (x2, f2)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Smallest x in [lo, hi] with pred(x) true, assuming pred is false-then-true
/// monotone on the bracket. Returns hi's side when pred(lo) is already true
/// (lo itself) or None when pred(hi) is false.
pub fn bisect_first_true<F: FnMut(f64) -> bool>(mut pred: F, lo: f64, hi: f64) -> Option<f64> {
    if pred(lo) {
        return Some(lo);
    }
    if !pred(hi) {
        return None;
    }
    let mut a = lo;
    let mut b = hi;
    let mut iters = 0;
    while (b - a) > tol::BISECT && iters < tol::BISECT_CAP {
        let mid = 0.5 * (a + b);
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
        iters += 1;
    }
    Some(b)
}

/// Exact optimum over a pair of rank-one effects a uu' + b vv' subject to
/// the measurement cap and one balance equality plus two sign conditions,
/// all expressed through the scalar data of the two directions:
/// c1 = <uu', A>, c2 = <vv', B>, hu = <uu', C>, hv = <vv', C>,
/// yu = <uu', objective>, yv = <vv', objective>, dot = |<u, v>|.
///
/// With c = dot, the operator cap a uu' + b vv' <= I reduces to
/// a + b - ab (1 - c^2) <= 1 on the branch through the origin, and every
/// scalar constraint becomes a sign or proportionality condition on
/// (a, b), so each case has a closed-form maximizer. Returns the best
/// value together with its amplitudes.
pub(crate) fn rank_one_amplitude_max(
    c1: f64,
    c2: f64,
    hu: f64,
    hv: f64,
    yu: f64,
    yv: f64,
    dot: f64,
    htol: f64,
) -> (f64, f64, f64) {
    let csq = (dot * dot).min(1.0);
    let cap_ok = |a: f64, b: f64| -> bool {
        let s = a + b;
        let det = a * b * (1.0 - csq);
        let lam = 0.5 * s + (0.25 * s * s - det).max(0.0).sqrt();
        lam <= 1.0 + 1e-9
    };
    let mut best = (0.0f64, 0.0f64, 0.0f64);
    let mut consider = |v: f64, a: f64, b: f64| {
        if v > best.0 {
            best = (v, a, b);
        }
    };
    // one active branch: the balance constraint must vanish on its own
    if c1 >= -1e-12 && hu.abs() <= htol {
        consider(yu, 1.0, 0.0);
    }
    if c2 >= -1e-12 && hv.abs() <= htol {
        consider(yv, 0.0, 1.0);
    }
    if c1 < -1e-12 || c2 < -1e-12 {
        return best;
    }
    if hu.abs() <= htol && hv.abs() <= htol {
        // balance inert: climb the cap curve b(a) = (1 - a)/(1 - k a)
        let k = 1.0 - csq;
        if csq >= 1.0 - 1e-15 {
            if yu >= yv {
                consider(yu, 1.0, 0.0);
            } else {
                consider(yv, 0.0, 1.0);
            }
            return best;
        }
        let mut cands = vec![0.0, 1.0];
        if yu > 1e-15 {
            let c = csq.sqrt();
            cands.push(((1.0 - c * (yv / yu).sqrt()) / k).clamp(0.0, 1.0));
        }
        for a in cands {
            let b = ((1.0 - a) / (1.0 - k * a)).max(0.0);
            if cap_ok(a, b) {
                consider(a * yu + b * yv, a, b);
            }
        }
        return best;
    }
    if hu * hv < 0.0 {
        // balance ties the amplitudes: b = kappa a with kappa = -hu / hv
        let kappa = -hu / hv;
        let coef = kappa * (1.0 - csq);
        let a_max = if coef <= 1e-15 {
            1.0 / (1.0 + kappa)
        } else {
            let disc = (1.0 + kappa).powi(2) - 4.0 * coef;
            ((1.0 + kappa) - disc.max(0.0).sqrt()) / (2.0 * coef)
        };
        let b_max = kappa * a_max;
        if a_max.is_finite() && a_max >= 0.0 && cap_ok(a_max, b_max) {
            consider(a_max * yu + b_max * yv, a_max, b_max);
        }
    }
    best
}
