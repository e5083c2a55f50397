//! Probability-vector specializations with exact piecewise-linear curves.
//!
//! For distributions p, q the testing region is generated by level tests,
//! and the upper boundary is the polygon obtained by spending levels in
//! decreasing order of the ratio p_i/q_i: levels with q_i = 0 come first
//! (they raise the curve vertically), levels with p_i = q_i = 0 carry no
//! information and are dropped. These routines keep everything in level
//! space, so the vertices come out exact rather than through a spectral
//! solve; the quantum routines reproduce them when handed the diagonal
//! embeddings, which is one of the cross-checks in the test batteries.

use crate::divergence::QEpsReport;
use crate::error::{QlcError, Result};
use crate::matcore::ExtReal;
use crate::tol;

fn checked_distribution(p: &[f64], label: &str) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(QlcError::invalid(format!("{label} is empty")));
    }
    let mut out = Vec::with_capacity(p.len());
    for &v in p {
        if !v.is_finite() || v < -1e-12 {
            return Err(QlcError::invalid(format!(
                "{label} has invalid weight {v}"
            )));
        }
        out.push(v.max(0.0));
    }
    let total: f64 = out.iter().sum();
    if total <= 0.0 {
        return Err(QlcError::invalid(format!("{label} sums to zero")));
    }
    for v in &mut out {
        *v /= total;
    }
    Ok(out)
}

/// Vertices of the relative curve of p over q, sorted along the x axis from
/// (0, 0) to (1, 1), one vertex per informative level.
pub fn blackwell_curve(p: &[f64], q: &[f64]) -> Result<Vec<(f64, f64)>> {
    if p.len() != q.len() {
        return Err(QlcError::DimMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let p = checked_distribution(p, "first distribution")?;
    let q = checked_distribution(q, "second distribution")?;

    let mut order: Vec<usize> = (0..p.len())
        .filter(|&i| p[i] > 0.0 || q[i] > 0.0)
        .collect();
    // descending ratio p/q with q = 0 levels first
    order.sort_by(|&i, &j| {
        let key = |k: usize| {
            if q[k] <= 0.0 {
                f64::INFINITY
            } else {
                p[k] / q[k]
            }
        };
        key(j).partial_cmp(&key(i)).unwrap()
    });

    let mut vertices = Vec::with_capacity(order.len() + 1);
    let (mut x, mut y) = (0.0f64, 0.0f64);
    vertices.push((0.0, 0.0));
    for &i in &order {
        x += q[i];
        y += p[i];
        vertices.push((x.min(1.0), y.min(1.0)));
    }
    let last = vertices.last_mut().unwrap();
    *last = (1.0, 1.0);
    Ok(vertices)
}

/// Minimal type-II weight at budget eps for distributions, evaluated on the
/// exact kink set of the scalar reduction. The kinks are the ratios
/// q_j / p_j over levels with p_j > 0; levels with p_j = 0 < q_j only
/// matter at eps = 0, where they push the optimum to the unattained limit
/// sum of q over the support of p, reported with an infinite `r_opt`.
pub fn classical_q_epsilon(p: &[f64], q: &[f64], eps: f64) -> Result<QEpsReport> {
    if p.len() != q.len() {
        return Err(QlcError::DimMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(QlcError::invalid(format!("epsilon {eps} outside [0, 1]")));
    }
    let p = checked_distribution(p, "first distribution")?;
    let q = checked_distribution(q, "second distribution")?;

    let objective = |r: f64| {
        let norm: f64 = p.iter().zip(&q).map(|(&pi, &qi)| (r * pi - qi).abs()).sum();
        0.5 * (1.0 + (1.0 - 2.0 * eps) * r - norm)
    };
    let mut kinks: Vec<f64> = p
        .iter()
        .zip(&q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| qi / pi)
        .collect();
    kinks.push(0.0);
    let (mut best_r, mut best_q) = (0.0, f64::NEG_INFINITY);
    for &r in &kinks {
        let v = objective(r);
        if v > best_q {
            best_q = v;
            best_r = r;
        }
    }
    if eps == 0.0 {
        let limit: f64 = p
            .iter()
            .zip(&q)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(_, &qi)| qi)
            .sum();
        if limit > best_q {
            best_q = limit;
            best_r = f64::INFINITY;
        }
    }
    let q_value = if best_q <= tol::Q_FLOOR {
        0.0
    } else {
        best_q.min(1.0)
    };
    let dh_bits = if q_value <= 0.0 {
        ExtReal::Inf
    } else {
        ExtReal::Finite(-q_value.log2())
    };
    Ok(QEpsReport {
        q_value,
        r_opt: best_r,
        dh_bits,
    })
}

/// Thermal weights exp(-beta E_i) / Z. `beta` may be +inf, which
/// concentrates uniformly on the ground levels (minimal energy within a
/// 1e-12 relative window); negative or NaN beta is rejected.
pub fn gibbs_weights(energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    if energies.is_empty() {
        return Err(QlcError::invalid("energy list is empty"));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(QlcError::invalid(format!(
            "inverse temperature must be >= 0, got {beta}"
        )));
    }
    for &e in energies {
        if !e.is_finite() {
            return Err(QlcError::invalid(format!("non-finite energy {e}")));
        }
    }
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
    if beta.is_infinite() {
        let window = 1e-12 * ground.abs().max(1.0);
        let flags: Vec<f64> = energies
            .iter()
            .map(|&e| if e <= ground + window { 1.0 } else { 0.0 })
            .collect();
        let count: f64 = flags.iter().sum();
        return Ok(flags.into_iter().map(|f| f / count).collect());
    }
    let weights: Vec<f64> = energies.iter().map(|&e| (-beta * (e - ground)).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}

/// Relative curve of p over the thermal weights of the given spectrum.
pub fn thermomajorization_curve(
    p: &[f64],
    energies: &[f64],
    beta: f64,
) -> Result<Vec<(f64, f64)>> {
    let gamma = gibbs_weights(energies, beta)?;
    blackwell_curve(p, &gamma)
}

/// Height of a curve produced by [`blackwell_curve`] at abscissa x; vertical
/// segments report their top.
pub fn curve_height(vertices: &[(f64, f64)], x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let mut height = 0.0f64;
    for w in vertices.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x < x0 - 1e-15 {
            break;
        }
        if x1 - x0 <= 1e-15 {
            if (x - x0).abs() <= 1e-15 {
                height = height.max(y1.max(y0));
            }
            continue;
        }
        if x <= x1 + 1e-15 {
            let f = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
            height = height.max(y0 + f * (y1 - y0));
        }
    }
    height
}
