//! Test-and-prepare channels: measure one binary effect on the input and
//! prepare one of two fixed output states.
//!
//! Such a channel maps X to Tr[EX] s_hit + Tr[(I-E)X] s_miss. It converts
//! the pair (rho1, rho2) into (to1, to2) exactly when the solved preparations
//!
//!   s_hit  = [(1 - e2) to1 - (1 - e1) to2] / (e1 - e2),
//!   s_miss = [-e2 to1 + e1 to2] / (e1 - e2),
//!
//! with e1 = Tr[E rho1], e2 = Tr[E rho2], are both positive semidefinite.
//! Writing (x, y) = (e2, e1) and (m', M') for the pencil extremes of the
//! target pair, positivity is the wedge
//!
//!   u = y - M' x >= 0   and   v = m' (1 - x) - (1 - y) >= 0,
//!
//! whose apex sits at x_A = (1 - m')/(M' - m'), y_A = M' x_A. The channel
//! exists iff the testing region of the input pair reaches the apex, a
//! single hypothesis-testing evaluation: Q^{1 - y_A}(rho1 || rho2) <= x_A.
//! With an unbounded target pencil the apex degenerates to (0, 1 - m') and
//! the test becomes Q^{m'} = 0.
//!
//! The signed margin reported alongside uses the dual form
//!
//!   2W = -(1 - m') + min_{r >= 0} ( ||(1+r) rho1 - (r M' + m') rho2||_1
//!                                   - r (M' - 1) ),
//!
//! nonnegative exactly when the channel exists. The minimand is convex in
//! r; substituting t = (r M' + m')/(1 + r) turns it into
//! (1+r(t)) ||rho1 - t rho2||_1 - r(t) (M' - 1) on t in [m', M'), which a
//! golden-section scan handles after clipping the open end.

use nalgebra::DMatrix;

use crate::divergence::q_epsilon;
use crate::error::{QlcError, Result};
use crate::matcore::{
    eig_hermitian, pencil_extremes, support_projector, DensityMatrix, ExtReal, HermitianMatrix,
    C64,
};
use crate::{opt, tol, Verdict};

/// Trace distance below which a target pair counts as collapsed, making
/// the conversion trivial (prepare one state unconditionally).
const DEGENERATE_PAIR: f64 = 1e-13;

/// Existence analysis for a test-and-prepare conversion.
#[derive(Clone, Copy, Debug)]
pub struct TapReport {
    /// Pencil extremes of the target pair.
    pub inf: f64,
    pub sup: ExtReal,
    /// Wedge apex the input region must reach, and its mirror image.
    pub vertex_a: (f64, f64),
    pub vertex_b: (f64, f64),
    /// Hypothesis-testing value Q^{1 - y_A} of the input pair.
    pub q_at_vertex: f64,
    /// Slack x_A - Q^{1 - y_A}; the verdict bands this number.
    pub gap: f64,
    /// Dual margin W, nonnegative iff the channel exists. Zero for a
    /// collapsed target pair, where the dual form does not apply.
    pub witness: f64,
    pub verdict: Verdict,
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

/// Can a test-and-prepare channel convert (rho1, rho2) into (to1, to2)?
/// The input and target pairs may live in different dimensions.
pub fn tap_exists(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
) -> Result<TapReport> {
    check_pair(rho1, rho2)?;
    check_pair(to1, to2)?;

    if to1.trace_distance(to2)? <= DEGENERATE_PAIR {
        // both hypotheses prepare the same state
        return Ok(TapReport {
            inf: 1.0,
            sup: ExtReal::Finite(1.0),
            vertex_a: (1.0, 1.0),
            vertex_b: (0.0, 0.0),
            q_at_vertex: 0.0,
            gap: 1.0,
            witness: 0.0,
            verdict: Verdict::Holds,
        });
    }

    let ext = pencil_extremes(to1, to2)?;
    let m = ext.inf;
    let (x_a, y_a) = match ext.sup {
        ExtReal::Finite(mm) => {
            let x = ((1.0 - m) / (mm - m)).clamp(0.0, 1.0);
            (x, (mm * x).clamp(0.0, 1.0))
        }
        ExtReal::Inf => (0.0, 1.0 - m),
    };
    let eps = (1.0 - y_a).clamp(0.0, 1.0);
    let q = q_epsilon(rho1, rho2, eps)?;
    let gap = x_a - q.q_value;

    let witness = match ext.sup {
        ExtReal::Finite(mm) => {
            let delta = 1e-9 * (mm - m);
            let value = |t: f64| {
                let r = (t - m) / (mm - t);
                let shifted = rho1.as_hermitian().sub(&rho2.as_hermitian().scale(t)).expect("dims match");
                -((1.0 + r) * shifted.trace_norm() - r * (mm - 1.0))
            };
            let (_, neg_min) = opt::golden_max(value, m, mm - delta);
            0.5 * (-(1.0 - m) - neg_min)
        }
        // apex at (0, 1 - m): the slack itself is the margin
        ExtReal::Inf => gap,
    };

    Ok(TapReport {
        inf: m,
        sup: ext.sup,
        vertex_a: (x_a, y_a),
        vertex_b: (1.0 - x_a, 1.0 - y_a),
        q_at_vertex: q.q_value,
        gap,
        witness,
        verdict: Verdict::from_gap(gap),
    })
}

/// A concrete test-and-prepare channel.
#[derive(Clone, Debug)]
pub struct TapChannel {
    effect: HermitianMatrix,
    on_hit: DensityMatrix,
    on_miss: DensityMatrix,
}

impl TapChannel {
    pub fn effect(&self) -> &HermitianMatrix {
        &self.effect
    }

    pub fn on_hit(&self) -> &DensityMatrix {
        &self.on_hit
    }

    pub fn on_miss(&self) -> &DensityMatrix {
        &self.on_miss
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let e = rho.expect(&self.effect)?.clamp(0.0, 1.0);
        let mixed = self
            .on_hit
            .as_hermitian()
            .scale(e)
            .add(&self.on_miss.as_hermitian().scale(1.0 - e))?;
        DensityMatrix::new(mixed)
    }

    /// Summed trace distance between the channel outputs and the targets.
    pub fn conversion_residual(
        &self,
        rho1: &DensityMatrix,
        rho2: &DensityMatrix,
        to1: &DensityMatrix,
        to2: &DensityMatrix,
    ) -> Result<f64> {
        Ok(self.apply(rho1)?.trace_distance(to1)? + self.apply(rho2)?.trace_distance(to2)?)
    }
}

/// Effect statistics against the input pair: (x, y) = (Tr[E rho2], Tr[E rho1]).
fn stats(e: &HermitianMatrix, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<(f64, f64)> {
    Ok((rho2.expect(e)?, rho1.expect(e)?))
}

/// Projectors onto the strictly positive and the near-zero eigenspaces of
/// rho1 - t rho2, the raw material for boundary effects: the positive block
/// alone is the curve projector, and blending the crossing block with a
/// weight sweeps the statistics continuously across the jump.
fn split_projectors(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t: f64,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let shifted = rho1.as_hermitian().sub(&rho2.as_hermitian().scale(t))?;
    let eig = eig_hermitian(&shifted);
    let dim = rho1.dim();
    let scale = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    let cut = 1e-8 * scale;
    let mut pos = DMatrix::<C64>::zeros(dim, dim);
    let mut zero = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        let target = if eig.values[k] > cut {
            &mut pos
        } else if eig.values[k] > -cut {
            &mut zero
        } else {
            continue;
        };
        let v = eig.vectors.column(k);
        for i in 0..dim {
            for j in 0..dim {
                target[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    Ok((HermitianMatrix::new(pos)?, HermitianMatrix::new(zero)?))
}

/// Solve the preparations for a measured statistic pair and clamp the
/// roundoff: inside the wedge the algebraic solutions are already states.
fn solve_preparations(
    to1: &DensityMatrix,
    to2: &DensityMatrix,
    e1: f64,
    e2: f64,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let denom = e1 - e2;
    if denom <= 1e-12 {
        return Err(QlcError::Infeasible(format!(
            "effect statistics too close to separate the preparations: e1 - e2 = {denom:e}"
        )));
    }
    let hit = to1
        .as_hermitian()
        .scale((1.0 - e2) / denom)
        .sub(&to2.as_hermitian().scale((1.0 - e1) / denom))?;
    let miss = to2
        .as_hermitian()
        .scale(e1 / denom)
        .sub(&to1.as_hermitian().scale(e2 / denom))?;
    Ok((clamp_state(&hit)?, clamp_state(&miss)?))
}

/// Rebuild a nearly-positive Hermitian matrix as a state, discarding
/// negative dust. Rejects genuine negativity.
fn clamp_state(h: &HermitianMatrix) -> Result<DensityMatrix> {
    let eig = eig_hermitian(h);
    if eig.values[0] < -1e-6 {
        return Err(QlcError::NotPositive {
            min_eig: eig.values[0],
        });
    }
    let dim = h.dim();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let mut trace = 0.0;
    for k in 0..dim {
        let lambda = eig.values[k].max(0.0);
        trace += lambda;
        if lambda == 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += v[i] * v[j].conj() * C64::new(lambda, 0.0);
            }
        }
    }
    if trace <= 1e-12 {
        return Err(QlcError::BadTrace { trace });
    }
    DensityMatrix::new(HermitianMatrix::new(m / C64::new(trace, 0.0))?)
}

/// Build a test-and-prepare channel carrying (rho1, rho2) to (to1, to2),
/// or fail when none exists. The effect is found on the input boundary: a
/// threshold scan brings Tr[E rho2] down to the wedge apex abscissa, a
/// crossing-space blend lands on it exactly, and among the surveyed
/// candidates the one deepest inside the wedge wins.
pub fn tap_construct(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
) -> Result<TapChannel> {
    let report = tap_exists(rho1, rho2, to1, to2)?;
    if report.verdict == Verdict::Fails {
        return Err(QlcError::Infeasible(format!(
            "no test-and-prepare channel: the input region misses the wedge apex by {:e}",
            -report.gap
        )));
    }
    let dim = rho1.dim();

    if to1.trace_distance(to2)? <= DEGENERATE_PAIR {
        // ignore the test outcome entirely
        let zero = HermitianMatrix::new(DMatrix::<C64>::zeros(dim, dim))?;
        return Ok(TapChannel {
            effect: zero,
            on_hit: to1.clone(),
            on_miss: to1.clone(),
        });
    }

    if report.sup.is_inf() {
        // apex at x = 0: the effect must avoid the second input entirely,
        // and the best such effect covers the first input's mass outside
        // the second's support
        let ker = HermitianMatrix::identity(dim).sub(&support_projector(rho2.as_hermitian()))?;
        let sandwiched = ker.as_matrix() * rho1.as_hermitian().as_matrix() * ker.as_matrix();
        let effect = support_projector(&HermitianMatrix::from_symmetric_parts(sandwiched));
        let (x, y) = stats(&effect, rho1, rho2)?;
        if x > tol::SUPPORT_LEAK {
            return Err(QlcError::Diagnostic(format!(
                "kernel effect leaks onto the second input: {x:e}"
            )));
        }
        let (on_hit, on_miss) = solve_preparations(to1, to2, y, 0.0)?;
        return Ok(TapChannel {
            effect,
            on_hit,
            on_miss,
        });
    }

    let (x_a, _y_a) = report.vertex_a;
    let (m, mm) = (
        report.inf,
        match report.sup {
            ExtReal::Finite(v) => v,
            ExtReal::Inf => unreachable!("handled above"),
        },
    );

    // threshold scan: x(t) = Tr[E_t rho2] is nonincreasing, so find the
    // first threshold at or below the apex abscissa
    let x_at = |t: f64| -> Result<f64> {
        let (pos, _) = split_projectors(rho1, rho2, t)?;
        Ok(rho2.expect(&pos)?)
    };
    let mut hi = 1.0;
    let mut doublings = 0;
    while x_at(hi)? > x_a && doublings < 200 {
        hi *= 2.0;
        doublings += 1;
    }
    let t_star = opt::bisect_first_true(
        |t| x_at(t).map(|x| x <= x_a).unwrap_or(false),
        0.0,
        hi,
    )
    .unwrap_or(hi);

    // candidate effects: the two raw boundary projectors bracketing the
    // jump and the blend landing on x_a exactly
    let mut candidates: Vec<HermitianMatrix> = Vec::new();
    let (pos, crossing) = split_projectors(rho1, rho2, t_star)?;
    let full = pos.add(&crossing)?;
    let x_pos = rho2.expect(&pos)?;
    let x_full = rho2.expect(&full)?;
    let span = x_full - x_pos;
    if span > 1e-15 {
        let theta = ((x_a - x_pos) / span).clamp(0.0, 1.0);
        candidates.push(pos.add(&crossing.scale(theta))?);
    }
    candidates.push(pos.clone());
    candidates.push(full);

    // deepest wedge penetration wins
    let margin = |x: f64, y: f64| (y - mm * x).min(m * (1.0 - x) - (1.0 - y));
    let mut best: Option<(f64, HermitianMatrix, f64, f64)> = None;
    for e in candidates {
        let (x, y) = stats(&e, rho1, rho2)?;
        let depth = margin(x, y);
        if best.as_ref().map_or(true, |(d, _, _, _)| depth > *d) {
            best = Some((depth, e, x, y));
        }
    }
    let (depth, effect, x, y) = best.expect("candidate list is never empty");
    if depth < -tol::VERDICT_MARGIN {
        return Err(QlcError::Infeasible(format!(
            "boundary search stayed outside the wedge: depth {depth:e}"
        )));
    }
    let (on_hit, on_miss) = solve_preparations(to1, to2, y, x)?;
    Ok(TapChannel {
        effect,
        on_hit,
        on_miss,
    })
}

/// Diagonal qubit pair with prescribed pencil extremes: the canonical
/// target sitting exactly at (inf, sup). With an unbounded upper extreme
/// the second state collapses onto one level.
pub fn tap_reference_pair(sup: ExtReal, inf: f64) -> Result<(DensityMatrix, DensityMatrix)> {
    if !(0.0..=1.0).contains(&inf) {
        return Err(QlcError::invalid(format!(
            "lower pencil extreme {inf} outside [0, 1]"
        )));
    }
    match sup {
        ExtReal::Finite(mm) => {
            if mm < 1.0 || !mm.is_finite() {
                return Err(QlcError::invalid(format!(
                    "upper pencil extreme {mm} must be at least 1"
                )));
            }
            let d = mm - inf;
            if d <= 1e-9 {
                return Err(QlcError::invalid(
                    "pencil extremes too close: the pair would be degenerate",
                ));
            }
            let s1 = DensityMatrix::from_probs(&[mm * (1.0 - inf) / d, inf * (mm - 1.0) / d])?;
            let s2 = DensityMatrix::from_probs(&[(1.0 - inf) / d, (mm - 1.0) / d])?;
            Ok((s1, s2))
        }
        ExtReal::Inf => {
            if inf >= 1.0 - 1e-12 {
                return Err(QlcError::invalid(
                    "an unbounded pair needs a lower extreme strictly below 1",
                ));
            }
            let s1 = DensityMatrix::from_probs(&[1.0 - inf, inf])?;
            let s2 = DensityMatrix::from_probs(&[0.0, 1.0])?;
            Ok((s1, s2))
        }
    }
}
