//! Relative Lorenz curves and the relative majorization decision.
//!
//! The curve of a pair (rho1, rho2) is the upper boundary of its testing
//! region. For a threshold t >= 0 the effect maximizing Tr[E rho1] - t
//! Tr[E rho2] is the support projector of the positive part of
//! rho1 - t rho2, and the boundary point it generates is
//! (Tr[E rho2], Tr[E rho1]). Sweeping t over the finite pencil eigenvalues
//! of (rho1, rho2) visits every vertex; t = 0 and t = inf close the curve
//! with the top edge and the vertical segment at x = 0.
//!
//! For a commuting pair the curve is the polygon through the sampled
//! vertices. In general the optimal projector rotates between eigenvalue
//! crossings and the boundary bulges into smooth arcs, so the polyline
//! through the samples is an inner approximation while the envelope of
//! their supporting lines ([`LorenzCurve::upper_bound_at`]) is an outer
//! one; both converge as the grid refines and the true boundary is pinched
//! between them.
//!
//! Majorization between pairs is decided on trace norms rather than on the
//! interpolated curves: pair A majorizes pair B exactly when
//! g(t) = ||rho1 - t rho2||_1 - ||sigma1 - t sigma2||_1 is nonnegative for
//! every t >= 0. Outside the pencil window of B the second norm collapses to
//! |1 - t|, which never exceeds the first, so only the window needs probing.

use crate::error::{QlcError, Result};
use crate::matcore::{
    pencil_eigenvalues, pencil_extremes, positive_part, sup_ratio, support_projector,
    DensityMatrix, ExtReal, HermitianMatrix,
};
use crate::Verdict;

/// One sampled vertex: the threshold scalar and the boundary point its
/// optimal effect generates. The closing samples use t = 0 for the top edge
/// and t = +inf for the vertical edge.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Piecewise-linear upper boundary, vertices sorted by x (ties by y).
#[derive(Clone, Debug)]
pub struct LorenzCurve {
    points: Vec<CurvePoint>,
}

impl LorenzCurve {
    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    /// Height of the boundary at abscissa x (clamped into [0, 1]); a
    /// vertical segment reports its top.
    pub fn height_at(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let pts = &self.points;
        let mut right = pts.len() - 1;
        for (i, p) in pts.iter().enumerate() {
            if p.x >= x {
                right = i;
                break;
            }
        }
        // absorb a vertical cluster: the top of the segment carries the max
        while right + 1 < pts.len() && pts[right + 1].x - x < 1e-14 {
            right += 1;
        }
        if right == 0 || pts[right].x - x < 1e-14 {
            return pts[right].y;
        }
        let (a, b) = (pts[right - 1], pts[right]);
        let span = b.x - a.x;
        if span < 1e-14 {
            return b.y.max(a.y);
        }
        a.y + (b.y - a.y) * (x - a.x) / span
    }

    /// Outer bound on the boundary height at x: the envelope of the
    /// supporting lines carried by the samples. Each sample's effect
    /// maximizes y - t x, so y <= t x + (p.y - p.t p.x) holds exactly for
    /// every region point; the minimum over samples converges to the
    /// boundary from above as the grid refines.
    pub fn upper_bound_at(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let mut bound = f64::INFINITY;
        for p in &self.points {
            if p.t.is_finite() {
                bound = bound.min(p.y + p.t * (x - p.x));
            }
        }
        bound.min(1.0)
    }
}

fn check_pair(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(QlcError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Boundary point generated by the optimal effect at threshold t; pass
/// `f64::INFINITY` for the vertical-edge endpoint.
pub fn curve_point(rho1: &DensityMatrix, rho2: &DensityMatrix, t: f64) -> Result<(f64, f64)> {
    check_pair(rho1, rho2)?;
    if t.is_nan() || t < 0.0 {
        return Err(QlcError::invalid(format!(
            "curve threshold must be >= 0, got {t}"
        )));
    }
    let effect = optimal_effect(rho1, rho2, t)?;
    boundary_point(rho1, rho2, &effect)
}

fn optimal_effect(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t: f64,
) -> Result<HermitianMatrix> {
    if t.is_infinite() {
        let dim = rho2.dim();
        let outside = HermitianMatrix::identity(dim).sub(&support_projector(rho2.as_hermitian()))?;
        return Ok(outside);
    }
    let pencil = rho1.as_hermitian().sub(&rho2.as_hermitian().scale(t))?;
    Ok(support_projector(&positive_part(&pencil)))
}

fn boundary_point(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    effect: &HermitianMatrix,
) -> Result<(f64, f64)> {
    let x = rho2.expect(effect)?.clamp(0.0, 1.0);
    let y = rho1.expect(effect)?.clamp(0.0, 1.0);
    Ok((x, y))
}

/// Curve of the pair: all pencil-eigenvalue vertices, midpoints between
/// them, `grid` extra geometric thresholds, and the closing corner samples.
pub fn lorenz_curve(rho1: &DensityMatrix, rho2: &DensityMatrix, grid: usize) -> Result<LorenzCurve> {
    check_pair(rho1, rho2)?;
    let kinks = pencil_eigenvalues(rho1, rho2)?;
    let mut thresholds: Vec<f64> = vec![0.0];
    thresholds.extend(kinks.iter().copied());
    for w in kinks.windows(2) {
        thresholds.push(0.5 * (w[0] + w[1]));
    }
    let hi = kinks.last().copied().unwrap_or(0.0);
    if hi > 0.0 && grid > 1 {
        let lo = kinks
            .iter()
            .copied()
            .find(|&k| k > hi * 1e-9)
            .unwrap_or(hi)
            .min(hi);
        let (llo, lhi) = (lo.ln(), hi.ln());
        for i in 0..grid {
            let f = i as f64 / (grid - 1) as f64;
            thresholds.push((llo + f * (lhi - llo)).exp());
        }
    }
    if sup_ratio(rho1, rho2)?.is_inf() {
        // unbounded pencil: the boundary meets x = 0 only asymptotically, so
        // ever-steeper supporting lines are the only way to pin it there
        let base = hi.max(1.0);
        for j in 1..=12 {
            thresholds.push(base * f64::powi(2.0, j));
        }
    }
    thresholds.retain(|v| v.is_finite() && *v >= 0.0);
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));

    let mut points: Vec<CurvePoint> = vec![
        CurvePoint { t: f64::INFINITY, x: 0.0, y: 0.0 },
        CurvePoint { t: 0.0, x: 1.0, y: 1.0 },
    ];
    for &t in &thresholds {
        let (x, y) = curve_point(rho1, rho2, t)?;
        points.push(CurvePoint { t, x, y });
    }
    let (x, y) = curve_point(rho1, rho2, f64::INFINITY)?;
    points.push(CurvePoint { t: f64::INFINITY, x, y });

    // ties keep the smallest threshold so a coincident corner sample cannot
    // shadow the finite supporting line it carries
    points.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
            .then(p.t.partial_cmp(&q.t).unwrap())
    });
    points.dedup_by(|p, q| (p.x - q.x).abs() <= 1e-13 && (p.y - q.y).abs() <= 1e-13);
    Ok(LorenzCurve { points })
}

/// Outcome of the pairwise ordering test.
#[derive(Clone, Copy, Debug)]
pub struct MajorizationReport {
    pub verdict: Verdict,
    /// Most negative slack of the trace-norm inequality over the probe set;
    /// zero and above means the ordering held everywhere probed.
    pub min_gap: f64,
    /// Threshold attaining `min_gap`; +inf marks the asymptotic comparison
    /// that applies when the second pair has an unbounded pencil.
    pub witness_t: f64,
    /// Number of probed thresholds.
    pub checked: usize,
}

fn norm_gap(
    a1: &DensityMatrix,
    a2: &DensityMatrix,
    b1: &DensityMatrix,
    b2: &DensityMatrix,
    t: f64,
) -> f64 {
    let na = a1
        .as_hermitian()
        .sub(&a2.as_hermitian().scale(t))
        .unwrap()
        .trace_norm();
    let nb = b1
        .as_hermitian()
        .sub(&b2.as_hermitian().scale(t))
        .unwrap()
        .trace_norm();
    na - nb
}

fn leak_mass(top: &DensityMatrix, bottom: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - top.expect(&support_projector(bottom.as_hermitian()))?)
}

/// Does the pair (rho1, rho2) relatively majorize (sigma1, sigma2)?
///
/// Equivalent statements: every effect statistic achievable on the second
/// pair is achievable on the first, the testing region of the first
/// contains that of the second, and the trace-norm family of the first
/// dominates the second at every threshold. The decision probes the third
/// form on the pencil kinks of both pairs, midpoints, a geometric grid of
/// `grid` thresholds, and the asymptotic comparison when the second pencil
/// is unbounded. The pairs may live in different dimensions.
pub fn relative_majorizes(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
    grid: usize,
) -> Result<MajorizationReport> {
    check_pair(rho1, rho2)?;
    check_pair(sigma1, sigma2)?;

    // identical pairs: containment is exact, skip the probes so noise in
    // the norm difference cannot blur an exact tie
    if rho1.dim() == sigma1.dim() {
        let same = |a: &DensityMatrix, b: &DensityMatrix| {
            a.as_hermitian().sub(b.as_hermitian()).unwrap().max_abs() <= 1e-14
        };
        if same(rho1, sigma1) && same(rho2, sigma2) {
            return Ok(MajorizationReport {
                verdict: Verdict::Holds,
                min_gap: 0.0,
                witness_t: 1.0,
                checked: 0,
            });
        }
    }
    // a second pair on the diagonal is majorized by everything: the first
    // norm is bounded below by |1 - t| = the second, exactly
    if sigma1.trace_distance(sigma2)? <= 1e-13 {
        return Ok(MajorizationReport {
            verdict: Verdict::Holds,
            min_gap: norm_gap(rho1, rho2, sigma1, sigma2, 1.0).max(0.0),
            witness_t: 1.0,
            checked: 1,
        });
    }

    let ext_b = pencil_extremes(sigma1, sigma2)?;
    let lo = ext_b.inf;
    let mut kinks = pencil_eigenvalues(rho1, rho2)?;
    kinks.extend(pencil_eigenvalues(sigma1, sigma2)?);
    // when a second state is rank deficient its sandwich spectrum misses
    // the crossings hiding along its kernel; the reversed pencil sees them
    // as reciprocals
    for (top, bottom) in [(rho1, rho2), (sigma1, sigma2)] {
        for v in pencil_eigenvalues(bottom, top)? {
            if v > 1e-300 {
                kinks.push(1.0 / v);
            }
        }
    }
    let hi = match ext_b.sup {
        ExtReal::Finite(h) => h,
        ExtReal::Inf => {
            let top = kinks.iter().copied().fold(lo.max(1.0), f64::max);
            4.0 * top
        }
    };

    let mut probes: Vec<f64> = vec![lo, hi, 1.0];
    kinks.retain(|&k| k >= lo && k <= hi);
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in kinks.windows(2) {
        probes.push(0.5 * (w[0] + w[1]));
    }
    probes.extend(kinks.iter().copied());
    let glo = lo.max(hi * 1e-9);
    if hi > glo && grid > 1 {
        let (llo, lhi) = (glo.ln(), hi.ln());
        for i in 0..grid {
            let f = i as f64 / (grid - 1) as f64;
            probes.push((llo + f * (lhi - llo)).exp());
        }
    }
    probes.retain(|t| t.is_finite() && *t >= lo && *t <= hi);
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));

    let mut min_gap = f64::INFINITY;
    let mut witness_t = 1.0;
    for &t in &probes {
        let gap = norm_gap(rho1, rho2, sigma1, sigma2, t);
        if gap < min_gap {
            min_gap = gap;
            witness_t = t;
        }
    }
    let mut checked = probes.len();
    if ext_b.sup.is_inf() {
        // beyond every kink both norms grow linearly and their difference
        // settles at twice the difference of off-support masses
        let gap = 2.0 * (leak_mass(rho1, rho2)? - leak_mass(sigma1, sigma2)?);
        checked += 1;
        if gap < min_gap {
            min_gap = gap;
            witness_t = f64::INFINITY;
        }
    }
    Ok(MajorizationReport {
        verdict: Verdict::from_gap(min_gap),
        min_gap,
        witness_t,
        checked,
    })
}
