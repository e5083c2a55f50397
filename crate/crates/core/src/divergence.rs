//! Divergences of a state pair derived from its testing region.
//!
//! All entropy-like values are in bits (base-2 logs); the projective metric
//! is in nats, matching its usual definition. For states rho, sigma:
//!
//! - `sup_alpha`: the smallest lambda >= 1 with
//!   ||lambda sigma - rho||_1 / (lambda - 1) <= (alpha + 1)/(alpha - 1).
//!   The left side is non-increasing in lambda (it is 1 exactly at
//!   lambda = sup(rho/sigma) and tends to 1 from above even without support
//!   containment), so the threshold crossing is found by bisection.
//! - `hilbert_alpha`: H_alpha = alpha/(alpha - 1) * log2(sup_alpha), with the
//!   closed endpoint forms at alpha = 1 (trace-norm scaling) and
//!   alpha = inf (max-relative entropy).
//! - `d_max` / `d_min`: max- and min-relative entropies.
//! - `hilbert_metric`: ln[ sup(rho/sigma) * sup(sigma/rho) ], the projective
//!   distance of the pair.
//! - `q_epsilon`: minimal type-II weight at type-I failure budget epsilon,
//!   through the scalar reduction
//!   Q^eps = max_{r >= 0} (1 + (1-2 eps) r - ||r rho1 - rho2||_1) / 2,
//!   which is concave piecewise-smooth in r and linear outside the pencil
//!   extremes of (rho2, rho1), so a golden-section pass over that bracket
//!   finds the optimum.

use crate::error::{QlcError, Result};
use crate::matcore::{
    pencil_extremes, sup_ratio, support_projector, DensityMatrix, ExtReal,
};
use crate::opt;
use crate::tol;

/// Overlaps below this count as zero when inverting a logarithm.
const ZERO_OVERLAP: f64 = 1e-13;

/// States closer than this in trace norm are treated as the same state by
/// the degenerate branches.
const SAME_STATE: f64 = 1e-14;

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(QlcError::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    Ok(())
}

/// Smallest lambda >= 1 whose rescaled pencil norm clears the alpha
/// threshold. Finite for every finite alpha > 1, including pairs without
/// support containment. Returns exactly 1 for identical states.
pub fn sup_alpha(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<f64> {
    check_pair(rho, sigma)?;
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(QlcError::invalid(format!(
            "sup_alpha needs finite alpha > 1, got {alpha}"
        )));
    }
    let target = (alpha + 1.0) / (alpha - 1.0);
    let norm_at = |lambda: f64| {
        sigma
            .as_hermitian()
            .scale(lambda)
            .sub(rho.as_hermitian())
            .unwrap()
            .trace_norm()
    };
    if norm_at(1.0) <= SAME_STATE {
        return Ok(1.0);
    }
    let lo = 1.0 + 1e-14;
    let hi = match sup_ratio(rho, sigma)? {
        // the norm ratio is exactly 1 for lambda at or above the pencil
        // supremum, below target; pad so rounding cannot lose the bracket
        ExtReal::Finite(s) => (s * (1.0 + 1e-9) + 1e-12).max(lo),
        ExtReal::Inf => {
            let mut h = 2.0;
            let mut budget = 0;
            while norm_at(h) / (h - 1.0) > target && budget < 200 {
                h *= 2.0;
                budget += 1;
            }
            h
        }
    };
    let crossing = opt::bisect_first_true(|l| norm_at(l) / (l - 1.0) <= target, lo, hi)
        .ok_or_else(|| QlcError::Diagnostic("sup_alpha bracket lost the crossing".into()))?;
    Ok(crossing.max(1.0))
}

/// H_alpha(rho || sigma) in bits for alpha in [1, +inf]. Pass
/// `f64::INFINITY` for the alpha = inf endpoint.
pub fn hilbert_alpha(rho: &DensityMatrix, sigma: &DensityMatrix, alpha: f64) -> Result<ExtReal> {
    check_pair(rho, sigma)?;
    if alpha.is_nan() || alpha < 1.0 {
        return Err(QlcError::invalid(format!(
            "hilbert_alpha needs alpha >= 1, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        let tn = rho.as_hermitian().sub(sigma.as_hermitian())?.trace_norm();
        return Ok(ExtReal::Finite(tn / (2.0 * std::f64::consts::LN_2)));
    }
    if alpha.is_infinite() {
        return d_max(rho, sigma);
    }
    let s = sup_alpha(rho, sigma, alpha)?;
    Ok(ExtReal::Finite(
        (alpha / (alpha - 1.0)) * s.log2().max(0.0),
    ))
}

/// Max-relative entropy log2 sup(rho/sigma); +inf without support
/// containment.
pub fn d_max(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    check_pair(rho, sigma)?;
    Ok(match sup_ratio(rho, sigma)? {
        ExtReal::Finite(s) => ExtReal::Finite(s.log2().max(0.0)),
        ExtReal::Inf => ExtReal::Inf,
    })
}

/// Min-relative entropy -log2 Tr[P_rho sigma], with P_rho the support
/// projector of the first argument; +inf for orthogonal supports.
pub fn d_min(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    check_pair(rho, sigma)?;
    let overlap = sigma.expect(&support_projector(rho.as_hermitian()))?;
    if overlap <= ZERO_OVERLAP {
        return Ok(ExtReal::Inf);
    }
    Ok(ExtReal::Finite(-overlap.min(1.0).log2()))
}

/// Projective metric of the pair in nats:
/// ln[ sup(rho/sigma) sup(sigma/rho) ]. Symmetric, zero iff rho = sigma,
/// +inf when either support containment fails.
pub fn hilbert_metric(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    check_pair(rho, sigma)?;
    let fwd = sup_ratio(rho, sigma)?;
    let bwd = sup_ratio(sigma, rho)?;
    Ok(match (fwd, bwd) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite((a * b).ln().max(0.0)),
        _ => ExtReal::Inf,
    })
}

/// Result of the hypothesis-testing optimum at a given epsilon.
#[derive(Clone, Copy, Debug)]
pub struct QEpsReport {
    /// Minimal Tr[E rho2] over effects with Tr[E rho1] >= 1 - eps; in [0, 1].
    pub q_value: f64,
    /// Maximizing scalar of the reduction (best probe when the supremum is
    /// only approached).
    pub r_opt: f64,
    /// -log2(q_value); +inf when the optimum is zero.
    pub dh_bits: ExtReal,
}

/// Q^eps(rho1 || rho2) through the scalar reduction. `eps` in [0, 1].
pub fn q_epsilon(rho1: &DensityMatrix, rho2: &DensityMatrix, eps: f64) -> Result<QEpsReport> {
    check_pair(rho1, rho2)?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(QlcError::invalid(format!("epsilon {eps} outside [0, 1]")));
    }
    let objective = |r: f64| {
        let tn = rho1
            .as_hermitian()
            .scale(r)
            .sub(rho2.as_hermitian())
            .unwrap()
            .trace_norm();
        0.5 * (1.0 + (1.0 - 2.0 * eps) * r - tn)
    };
    // slope changes live inside the pencil extremes of (rho2, rho1)
    let ext = pencil_extremes(rho2, rho1)?;
    let r_lo = ext.inf;
    let (best_r, best_q) = match ext.sup {
        ExtReal::Finite(r_hi) if r_hi - r_lo <= tol::GOLDEN => (r_lo, objective(r_lo)),
        ExtReal::Finite(r_hi) => opt::golden_max(objective, r_lo, r_hi),
        ExtReal::Inf if eps == 0.0 => {
            // without support containment the zero-budget objective is
            // nondecreasing with limit Tr[P_rho1 rho2]; report that value
            // exactly and a probe scalar that nearly attains it
            let closed = rho2.expect(&support_projector(rho1.as_hermitian()))?;
            let mut r = r_lo.max(1.0);
            let mut budget = 0;
            while closed - objective(r) > 1e-12 && budget < 50 {
                r *= 2.0;
                budget += 1;
            }
            (r, closed)
        }
        ExtReal::Inf => {
            // beyond every kink the objective falls at rate eps, and it is
            // nonpositive past r = 1/eps while the maximum is not, so the
            // bracket is capped there; blind growth would push evaluations
            // into scalars where the trace-norm cancellation loses the value
            let hi = r_lo.max(1.0) + 1.0 / eps;
            opt::golden_max(objective, r_lo, hi)
        }
    };
    let q = if best_q <= tol::Q_FLOOR {
        0.0
    } else {
        best_q.min(1.0)
    };
    let dh = if q <= 0.0 {
        ExtReal::Inf
    } else {
        ExtReal::Finite(-q.log2())
    };
    Ok(QEpsReport {
        q_value: q,
        r_opt: best_r.max(0.0),
        dh_bits: dh,
    })
}

/// Trace distance (1/2)||rho - sigma||_1; re-exported here because the CLI
/// metric table routes through this module.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.trace_distance(sigma)
}
