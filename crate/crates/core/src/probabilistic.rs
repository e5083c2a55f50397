//! Probabilistic pair conversions and their success optimum.
//!
//! A probabilistic protocol is an instrument with two success outcomes and
//! a failure outcome. Success on input rho_i happens with probability p_i
//! and leaves the target state; the ratio q = p1 / p2 is a free parameter
//! of the problem. Writing (m, M) for the pencil extremes of the input
//! pair and (m', M') for the target pair, protocols with positive success
//! probability exist exactly for q inside [m/m', M/M'] (extended-real
//! ratios), so the interval is empty iff the input's Hilbert width
//! ln(M/m) is smaller than the target's.
//!
//! For a fixed admissible q the best success probability on the first
//! input solves
//!
//!   maximize  Tr[(E + F) rho1]
//!   s.t.      E >= 0, F >= 0, E + F <= I,
//!             Tr[E (rho1 - q M' rho2)] >= 0,
//!             Tr[F (q m' rho2 - rho1)] >= 0,
//!             Tr[(E + F)(q rho2 - rho1)] = 0,
//!
//! where an unbounded M' turns the first scalar constraint into
//! Tr[E rho2] <= 0 and m' = 0 turns the second into Tr[F rho1] <= 0. The
//! solver is a projected-gradient augmented Lagrangian: the two spectral
//! cone constraints are kept exactly by a Dykstra projection onto
//! {E >= 0, F >= 0} intersected with {E + F <= I}, while the three scalar
//! constraints enter through multipliers with a growing quadratic penalty.
//!
//! From a solved (E, F) the instrument itself is assembled by inverting
//! the two-by-two mixing system for the prepared states, mirroring the
//! test-and-prepare construction; the failure branch prepares the second
//! target so the full map stays trace preserving.

use nalgebra::{DMatrix, DVector};

use crate::error::{QlcError, Result};
use crate::matcore::{
    eig_hermitian, pencil_extremes, positive_part, support_projector, DensityMatrix, ExtReal,
    HermitianMatrix, C64,
};
use crate::Verdict;

/// Admissible success-ratio interval [lo, hi] for q = p1 / p2. `lo` may be
/// +inf, which marks an empty window.
#[derive(Clone, Copy, Debug)]
pub struct QWindow {
    pub lo: f64,
    pub hi: ExtReal,
}

impl QWindow {
    /// Signed feasibility slack: nonnegative iff some admissible ratio
    /// exists. Infinite magnitudes appear when an endpoint is unbounded.
    pub fn feasibility_gap(&self) -> f64 {
        if !self.lo.is_finite() {
            return f64::NEG_INFINITY;
        }
        match self.hi {
            ExtReal::Inf => f64::INFINITY,
            ExtReal::Finite(h) => h - self.lo,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.feasibility_gap() < 0.0
    }

    /// Does q sit inside the window (closed endpoints)?
    pub fn contains(&self, q: f64) -> bool {
        if !self.lo.is_finite() || q < self.lo {
            return false;
        }
        match self.hi {
            ExtReal::Inf => true,
            ExtReal::Finite(h) => q <= h,
        }
    }
}

/// Extended-real ratio a / b for pencil extremes: both-zero and both-
/// infinite ratios resolve by the window's closure conventions.
fn ratio_lo(m: f64, m_to: f64) -> f64 {
    if m <= 0.0 {
        0.0
    } else if m_to <= 0.0 {
        f64::INFINITY
    } else {
        m / m_to
    }
}

fn ratio_hi(sup: ExtReal, sup_to: ExtReal) -> ExtReal {
    match (sup, sup_to) {
        (ExtReal::Inf, _) => ExtReal::Inf,
        (ExtReal::Finite(_), ExtReal::Inf) => ExtReal::Finite(0.0),
        (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a / b),
    }
}

/// Admissible ratio window for converting (rho1, rho2) into (to1, to2).
pub fn q_window(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
) -> Result<QWindow> {
    let from = pencil_extremes(rho1, rho2)?;
    let to = pencil_extremes(to1, to2)?;
    Ok(QWindow {
        lo: ratio_lo(from.inf, to.inf),
        hi: ratio_hi(from.sup, to.sup),
    })
}

/// Does any ratio admit a protocol with positive success probability?
/// Equivalent to the input pair's Hilbert width dominating the target's.
pub fn prob_feasible(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
) -> Result<Verdict> {
    Ok(Verdict::from_gap(
        q_window(rho1, rho2, to1, to2)?.feasibility_gap(),
    ))
}

/// Largest possible deterministic-success bound: p1 <= min(1, M / M').
pub fn p1_bound(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
) -> Result<f64> {
    let w = q_window(rho1, rho2, to1, to2)?;
    Ok(match w.hi {
        ExtReal::Inf => 1.0,
        ExtReal::Finite(h) => h.min(1.0),
    })
}

/// Bits of max-divergence the conversion must create: the target's
/// max-divergence minus the input's, resolved through the ratio M / M' so
/// the unbounded cases stay consistent (-inf when the input diverges).
pub fn max_free_energy_diff(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
) -> Result<f64> {
    let w = q_window(rho1, rho2, to1, to2)?;
    Ok(match w.hi {
        ExtReal::Inf => f64::NEG_INFINITY,
        ExtReal::Finite(h) if h <= 0.0 => f64::INFINITY,
        ExtReal::Finite(h) => -h.log2(),
    })
}

struct Scalars {
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    c: DMatrix<C64>,
}

fn constraint_matrices(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    q: f64,
    to_inf: f64,
    to_sup: ExtReal,
) -> Scalars {
    let r1 = rho1.as_hermitian().as_matrix();
    let r2 = rho2.as_hermitian().as_matrix();
    let a = match to_sup {
        ExtReal::Finite(mm) => r1 - r2.scale(q * mm),
        ExtReal::Inf => -r2.clone(),
    };
    let b = if to_inf > 0.0 {
        r2.scale(q * to_inf) - r1
    } else {
        -r1.clone()
    };
    let c = r2.scale(q) - r1;
    // scalar constraints are scale free, so normalize each generator to
    // keep the penalty curvature (and thus the step size) well conditioned
    let unit = |m: DMatrix<C64>| {
        let n = fro_norm(&m);
        if n > 1e-14 {
            m / C64::new(n, 0.0)
        } else {
            m
        }
    };
    Scalars {
        a: unit(a),
        b: unit(b),
        c: unit(c),
    }
}

fn real_inner(x: &DMatrix<C64>, y: &DMatrix<C64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            acc += (x[(i, j)] * y[(j, i)]).re;
        }
    }
    acc
}

fn fro_norm(x: &DMatrix<C64>) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn psd_part(x: &DMatrix<C64>) -> DMatrix<C64> {
    let h = HermitianMatrix::from_symmetric_parts(x.clone());
    let eig = eig_hermitian(&h);
    let dim = x.nrows();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        let lambda = eig.values[k];
        if lambda <= 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += v[i] * v[j].conj() * C64::new(lambda, 0.0);
            }
        }
    }
    out
}

/// Dykstra projection onto {E >= 0, F >= 0} intersect {E + F <= I}.
fn project_feasible(e0: &DMatrix<C64>, f0: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let dim = e0.nrows();
    let eye = DMatrix::<C64>::identity(dim, dim);
    let mut e = e0.clone();
    let mut f = f0.clone();
    let mut pe = DMatrix::<C64>::zeros(dim, dim);
    let mut pf = DMatrix::<C64>::zeros(dim, dim);
    let mut se = DMatrix::<C64>::zeros(dim, dim);
    let mut sf = DMatrix::<C64>::zeros(dim, dim);
    for _ in 0..40 {
        let prev_e = e.clone();
        let prev_f = f.clone();
        // cone block
        let ce = psd_part(&(&e + &pe));
        let cf = psd_part(&(&f + &pf));
        pe = &e + &pe - &ce;
        pf = &f + &pf - &cf;
        // sum block: shave the excess of E + F over I evenly
        let te = &ce + &se;
        let tf = &cf + &sf;
        let excess = psd_part(&(&te + &tf - &eye));
        e = &te - &excess.scale(0.5);
        f = &tf - &excess.scale(0.5);
        se = te - &e;
        sf = tf - &f;
        let drift = fro_norm(&(&e - &prev_e)) + fro_norm(&(&f - &prev_f));
        if drift <= 1e-13 {
            break;
        }
    }
    (e, f)
}

/// Worst violation of the full constraint system at (E, F), in absolute
/// scale: spectral excursions plus the three scalar residuals.
fn infeasibility(e: &DMatrix<C64>, f: &DMatrix<C64>, sc: &Scalars) -> f64 {
    let dim = e.nrows();
    let eigmin = |x: &DMatrix<C64>| {
        eig_hermitian(&HermitianMatrix::from_symmetric_parts(x.clone())).values[0]
    };
    let sum = e + f;
    let eye = DMatrix::<C64>::identity(dim, dim);
    let cap = -eigmin(&(&eye - &sum));
    let h = real_inner(&sum, &sc.c);
    let ga = real_inner(e, &sc.a);
    let gb = real_inner(f, &sc.b);
    (-eigmin(e))
        .max(-eigmin(f))
        .max(cap)
        .max(h.abs())
        .max(-ga)
        .max(-gb)
        .max(0.0)
}

/// Dykstra projection onto the full feasible set: the two cones, the sum
/// cap, the balance hyperplane and the two scalar halfspaces. Returns a
/// point whose constraint violations are all below `target` when the
/// sweep budget suffices; the caller treats its value as a certified
/// lower bound on the optimum.
fn restore_feasible(
    e0: &DMatrix<C64>,
    f0: &DMatrix<C64>,
    sc: &Scalars,
    target: f64,
) -> (DMatrix<C64>, DMatrix<C64>) {
    let dim = e0.nrows();
    let eye = DMatrix::<C64>::identity(dim, dim);
    let zero = DMatrix::<C64>::zeros(dim, dim);
    let mut e = e0.clone();
    let mut f = f0.clone();
    // one Dykstra correction pair per constraint set
    let mut corr: Vec<(DMatrix<C64>, DMatrix<C64>)> = vec![(zero.clone(), zero.clone()); 6];
    let nc2 = 2.0 * fro_norm(&sc.c).powi(2).max(1e-300);
    let na2 = fro_norm(&sc.a).powi(2).max(1e-300);
    let nb2 = fro_norm(&sc.b).powi(2).max(1e-300);
    for sweep in 0..4000 {
        for (idx, c) in corr.iter_mut().enumerate() {
            let ye = &e + &c.0;
            let yf = &f + &c.1;
            let (ne, nf) = match idx {
                0 => (psd_part(&ye), yf.clone()),
                1 => (ye.clone(), psd_part(&yf)),
                2 => {
                    let excess = psd_part(&(&ye + &yf - &eye));
                    (&ye - &excess.scale(0.5), &yf - &excess.scale(0.5))
                }
                3 => {
                    let h = real_inner(&(&ye + &yf), &sc.c);
                    let t = h / nc2;
                    (&ye - &sc.c.scale(t), &yf - &sc.c.scale(t))
                }
                4 => {
                    let ga = real_inner(&ye, &sc.a);
                    if ga < 0.0 {
                        (&ye - &sc.a.scale(ga / na2), yf.clone())
                    } else {
                        (ye.clone(), yf.clone())
                    }
                }
                _ => {
                    let gb = real_inner(&yf, &sc.b);
                    if gb < 0.0 {
                        (ye.clone(), &yf - &sc.b.scale(gb / nb2))
                    } else {
                        (ye.clone(), yf.clone())
                    }
                }
            };
            c.0 = ye - &ne;
            c.1 = yf - &nf;
            e = ne;
            f = nf;
        }
        if sweep % 4 == 3 && infeasibility(&e, &f, sc) <= target {
            break;
        }
    }
    (e, f)
}

/// Directions on the boundary of the cone {x : x' M x >= 0} built from the
/// extreme eigenvectors of M: the two balanced combinations of the top and
/// bottom eigenvectors whose form vanishes exactly. When an inequality
/// constraint is active at the optimum, the optimal effect direction lies on
/// this boundary, so these are the natural closed-form candidates for the
/// rank-one polish (for qubits they are the entire boundary).
fn cone_null_dirs(m: &DMatrix<C64>) -> Vec<DVector<C64>> {
    let eig = eig_hermitian(&HermitianMatrix::from_symmetric_parts(m.clone()));
    let last = eig.values.len() - 1;
    let lo = eig.values[0];
    let hi = eig.values[last];
    let scale = lo.abs().max(hi.abs()).max(1e-14);
    let mut dirs = Vec::new();
    // eigenvectors with (numerically) vanishing eigenvalue already sit on
    // the boundary
    for (i, &v) in eig.values.iter().enumerate() {
        if v.abs() <= 1e-12 * scale {
            dirs.push(eig.vectors.column(i).into_owned());
        }
    }
    if lo < -1e-12 * scale && hi > 1e-12 * scale {
        let wp = eig.vectors.column(last).into_owned();
        let wn = eig.vectors.column(0).into_owned();
        let theta = (hi / -lo).sqrt().atan();
        let (s, c) = theta.sin_cos();
        for sign in [1.0f64, -1.0] {
            let d = &wp * C64::new(c, 0.0) + &wn * C64::new(sign * s, 0.0);
            let n = d.norm();
            if n > 1e-10 {
                dirs.push(d / C64::new(n, 0.0));
            }
        }
    }
    dirs
}

/// Smallest rotation of a unit direction toward the dominant eigenvector of
/// M that zeroes the quadratic form x' M x, used to pull a direction that
/// sits barely outside the cone {x' M x >= 0} back onto its boundary. The
/// form along the arc is a rational quadratic, so the root is closed form.
fn cone_repair(m: &DMatrix<C64>, x: &DVector<C64>) -> Option<DVector<C64>> {
    let c0 = (x.adjoint() * m * x)[(0, 0)].re;
    if c0 >= -1e-12 {
        return Some(x.clone());
    }
    let eig = eig_hermitian(&HermitianMatrix::from_symmetric_parts(m.clone()));
    let last = eig.values.len() - 1;
    if eig.values[last] <= 0.0 {
        // the cone is trivial; no rotation can help
        return None;
    }
    let w = eig.vectors.column(last).into_owned();
    let overlap = (x.adjoint() * &w)[(0, 0)];
    let mut wt = w - x * overlap;
    let n = wt.norm();
    if n <= 1e-10 {
        return None;
    }
    wt /= C64::new(n, 0.0);
    let beta = (wt.adjoint() * m * x)[(0, 0)].re;
    let gamma = (wt.adjoint() * m * &wt)[(0, 0)].re;
    let disc = beta * beta - c0 * gamma;
    if disc < 0.0 {
        return None;
    }
    let (t1, t2) = {
        let r = disc.sqrt();
        if gamma.abs() <= 1e-14 {
            if beta.abs() <= 1e-14 {
                return None;
            }
            let t = -c0 / (2.0 * beta);
            (t, t)
        } else {
            ((-beta + r) / gamma, (-beta - r) / gamma)
        }
    };
    let t = if t1.abs() <= t2.abs() { t1 } else { t2 };
    let repaired = x + wt * C64::new(t, 0.0);
    let n = repaired.norm();
    if n <= 1e-10 {
        return None;
    }
    Some(repaired / C64::new(n, 0.0))
}

struct SolvedPmax {
    value: f64,
    e: DMatrix<C64>,
    f: DMatrix<C64>,
}

/// Augmented-Lagrangian projected gradient loop. Always runs, window or
/// not: infeasible ratios drive the optimum to zero on their own.
fn solve_pmax(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    q: f64,
    to_inf: f64,
    to_sup: ExtReal,
) -> Result<SolvedPmax> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(QlcError::invalid(format!(
            "success ratio must be a finite nonnegative number, got {q}"
        )));
    }
    let dim = rho1.dim();
    let r1 = rho1.as_hermitian().as_matrix().clone();
    let sc = constraint_matrices(rho1, rho2, q, to_inf, to_sup);

    // structured warm start: the optimal effects concentrate where the
    // likelihood ratio clears q M' (success on the first branch) and where
    // it drops below q m' (second branch), so begin from those spectral
    // projectors, trimmed to the cap and balanced to zero the equality
    let raw1 = rho1.as_hermitian().as_matrix();
    let raw2 = rho2.as_hermitian().as_matrix();
    let a_raw = match to_sup {
        ExtReal::Finite(mm) => raw1 - raw2.scale(q * mm),
        ExtReal::Inf => -raw2.clone(),
    };
    let b_raw = if to_inf > 0.0 {
        raw2.scale(q * to_inf) - raw1
    } else {
        -raw1.clone()
    };
    let e_seed = support_projector(&positive_part(&HermitianMatrix::from_symmetric_parts(a_raw)));
    let f_seed = support_projector(&positive_part(&HermitianMatrix::from_symmetric_parts(b_raw)));
    let (e0, f0) = project_feasible(e_seed.as_matrix(), f_seed.as_matrix());
    let he = real_inner(&e0, &sc.c);
    let hf = real_inner(&f0, &sc.c);
    let (ce, cf) = if he * hf < 0.0 {
        let r = -he / hf;
        if r <= 1.0 {
            (1.0, r)
        } else {
            (1.0 / r, 1.0)
        }
    } else if (he + hf).abs() <= 1e-12 {
        (1.0, 1.0)
    } else {
        (0.0, 0.0)
    };
    let mut e = e0.scale(ce);
    let mut f = f0.scale(cf);
    let mut lam = 0.0_f64;
    let mut mu_a = 0.0_f64;
    let mut mu_b = 0.0_f64;
    // trailing multiplier copies drive the accelerated dual update
    let mut lam_prev = 0.0_f64;
    let mut mu_a_prev = 0.0_f64;
    let mut mu_b_prev = 0.0_f64;
    let mut theta = 1.0_f64;
    let mut tau = 8.0_f64;
    let cap = 20_000usize;
    let mut used = 0usize;

    let na2 = fro_norm(&sc.a).powi(2).max(1e-12);
    let nb2 = fro_norm(&sc.b).powi(2).max(1e-12);
    let nc2 = fro_norm(&sc.c).powi(2).max(1e-12);

    let mut prev_infeas = f64::INFINITY;
    // best value seen at a point that was feasible outright; the origin is
    // always admissible, so zero is the safe floor
    let mut incumbent = 0.0f64;
    let mut incumbent_e = DMatrix::<C64>::zeros(dim, dim);
    let mut incumbent_f = DMatrix::<C64>::zeros(dim, dim);
    // best value seen while only slightly infeasible: the dual iteration can
    // pass close to the optimum long before it settles, so this snapshot is
    // worth carrying to the restoration stage as a candidate
    let mut near = 0.0f64;
    let mut near_e = DMatrix::<C64>::zeros(dim, dim);
    let mut near_f = DMatrix::<C64>::zeros(dim, dim);
    'outer: for _outer in 0..80 {
        // extrapolated multipliers: Nesterov momentum on the dual ascent
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let dual_beta = (theta - 1.0) / theta_next;
        let lam_hat = lam + dual_beta * (lam - lam_prev);
        let mu_a_hat = (mu_a + dual_beta * (mu_a - mu_a_prev)).max(0.0);
        let mu_b_hat = (mu_b + dual_beta * (mu_b - mu_b_prev)).max(0.0);

        // the penalty curvature bounds the gradient step; tau stays capped
        // so the step never collapses and the multipliers do the real work
        let lip = tau * (2.0 * nc2 + na2 + nb2) + 1.0;
        let step = 1.0 / lip;
        // accelerated projected ascent on the augmented Lagrangian
        let mut ye = e.clone();
        let mut yf = f.clone();
        let mut momentum = 1.0f64;
        let mut last_move = f64::INFINITY;
        for _ in 0..400 {
            used += 1;
            let h = real_inner(&(&ye + &yf), &sc.c);
            let ga = real_inner(&ye, &sc.a);
            let gb = real_inner(&yf, &sc.b);
            let le = lam_hat + tau * h;
            let wa = (mu_a_hat - tau * ga).max(0.0);
            let wb = (mu_b_hat - tau * gb).max(0.0);
            let grad_e = &r1 - &sc.c.scale(le) + &sc.a.scale(wa);
            let grad_f = &r1 - &sc.c.scale(le) + &sc.b.scale(wb);
            let (ne, nf) =
                project_feasible(&(&ye + &grad_e.scale(step)), &(&yf + &grad_f.scale(step)));
            let de = &ne - &e;
            let df = &nf - &f;
            last_move = fro_norm(&de) + fro_norm(&df);
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            momentum = next_momentum;
            ye = &ne + &de.scale(beta);
            yf = &nf + &df.scale(beta);
            e = ne;
            f = nf;
            if last_move <= 1e-12 || used >= cap {
                break;
            }
        }
        let h = real_inner(&(&e + &f), &sc.c);
        let ga = real_inner(&e, &sc.a);
        let gb = real_inner(&f, &sc.b);
        lam_prev = lam;
        mu_a_prev = mu_a;
        mu_b_prev = mu_b;
        lam = lam_hat + tau * h;
        mu_a = (mu_a_hat - tau * ga).max(0.0);
        mu_b = (mu_b_hat - tau * gb).max(0.0);
        let infeas = h.abs().max(-ga).max(-gb).max(0.0);
        if infeas <= 1e-9 {
            let val = real_inner(&(&e + &f), &r1);
            if val > incumbent {
                incumbent = val;
                incumbent_e = e.clone();
                incumbent_f = f.clone();
            }
        } else if infeas <= 1e-4 {
            let val = real_inner(&(&e + &f), &r1);
            if val > near {
                near = val;
                near_e = e.clone();
                near_f = f.clone();
            }
        }
        if std::env::var("QLC_DEBUG_PMAX").is_ok() {
            eprintln!(
                "outer {_outer}: tau {tau:.1} used {used} move {last_move:.2e} h {h:.3e} ga {ga:.3e} gb {gb:.3e} val {:.6}",
                real_inner(&(&e + &f), &r1)
            );
        }
        if (infeas <= 1e-9 && last_move <= 1e-9) || used >= cap {
            break 'outer;
        }
        if infeas > prev_infeas {
            // restart the dual momentum when feasibility regresses
            theta = 1.0;
            lam_prev = lam;
            mu_a_prev = mu_a;
            mu_b_prev = mu_b;
        } else {
            theta = theta_next;
        }
        // grow the penalty only while feasibility is stalling
        if infeas > 0.5 * prev_infeas {
            tau = (tau * 1.5).min(2e5);
        }
        prev_infeas = infeas;
    }

    // certify each candidate by projecting onto the feasible set: a value is
    // only ever reported at an (almost exactly) feasible point, so an
    // inadmissible ratio cannot fake a positive answer. The pool holds the
    // loop endpoint plus both snapshots; the origin is the implicit floor.
    if std::env::var("QLC_DEBUG_PMAX").is_ok() {
        eprintln!("snapshots: near {near:.6} incumbent {incumbent:.6}");
    }
    let mut pool = vec![(e, f)];
    if near > 0.0 {
        pool.push((near_e, near_f));
    }
    if incumbent > 0.0 {
        pool.push((incumbent_e, incumbent_f));
    }
    let mut value = 0.0f64;
    let mut best_e = DMatrix::<C64>::zeros(dim, dim);
    let mut best_f = DMatrix::<C64>::zeros(dim, dim);
    // amplitude polish: re-solve the two weights exactly along the leading
    // directions of a pair of effects, after pulling any direction that
    // sits a hair outside its cone back onto the cone boundary. The closed
    // form satisfies every constraint by construction, so its value stands
    // regardless of how feasible the source pair was.
    // boundary directions of the two cones, shared by every polish call
    let a_dirs = cone_null_dirs(&sc.a);
    let b_dirs = cone_null_dirs(&sc.b);
    type Polished = (f64, DMatrix<C64>, DMatrix<C64>);
    let polish = |e: &DMatrix<C64>, f: &DMatrix<C64>| -> Option<Polished> {
        let top_dir = |m: &DMatrix<C64>| {
            let eig = eig_hermitian(&HermitianMatrix::from_symmetric_parts(m.clone()));
            let last = eig.values.len() - 1;
            (eig.values[last], eig.vectors.column(last).into_owned())
        };
        let (we, u) = top_dir(e);
        let (wf, v) = top_dir(f);
        if we <= 1e-12 && wf <= 1e-12 {
            return None;
        }
        // candidates per side: the candidate's own leading direction, pulled
        // back onto the cone boundary if it sits a hair outside, plus the
        // closed-form boundary directions for the case where the inequality
        // is active at the optimum
        let mut us: Vec<DVector<C64>> = Vec::with_capacity(1 + a_dirs.len());
        if let Some(ur) = cone_repair(&sc.a, &u) {
            us.push(ur);
        }
        us.extend(a_dirs.iter().cloned());
        let mut vs: Vec<DVector<C64>> = Vec::with_capacity(1 + b_dirs.len());
        if let Some(vr) = cone_repair(&sc.b, &v) {
            vs.push(vr);
        }
        vs.extend(b_dirs.iter().cloned());
        let form = |m: &DMatrix<C64>, x: &DVector<C64>| (x.adjoint() * m * x)[(0, 0)].re;
        let mut best: Option<Polished> = None;
        for u in &us {
            for v in &vs {
                let dot = (u.adjoint() * v)[(0, 0)].norm();
                let (pv, pa, pb) = crate::opt::rank_one_amplitude_max(
                    form(&sc.a, u),
                    form(&sc.b, v),
                    form(&sc.c, u),
                    form(&sc.c, v),
                    form(&r1, u),
                    form(&r1, v),
                    dot,
                    1e-10,
                );
                if best.as_ref().is_none_or(|b| pv.min(1.0) > b.0) {
                    best = Some((
                        pv.min(1.0),
                        (u * u.adjoint()).scale(pa),
                        (v * v.adjoint()).scale(pb),
                    ));
                }
            }
        }
        best
    };
    for (ce, cf) in pool {
        // polish the raw candidate first: restoration can drag the point
        // into a different basin, so the pre-restoration directions carry
        // independent information
        if let Some((pv, pe, pf)) = polish(&ce, &cf) {
            if pv > value {
                value = pv;
                best_e = pe;
                best_f = pf;
            }
        }
        let (mut e, mut f) = restore_feasible(&ce, &cf, &sc, 1e-11);
        for _ in 0..2 {
            if infeasibility(&e, &f, &sc) <= 1e-9 {
                break;
            }
            // restart the sweep with fresh corrections; Dykstra recovers
            // from a poor basin much faster this way than by continuing
            let (re, rf) = restore_feasible(&e, &f, &sc, 1e-11);
            e = re;
            f = rf;
        }
        // the restored point itself only counts when the projection
        // certified it
        let certified = infeasibility(&e, &f, &sc) <= 1e-8;
        if certified {
            let cand = real_inner(&(&e + &f), &r1).clamp(0.0, 1.0);
            if cand > value {
                value = cand;
                best_e = e.clone();
                best_f = f.clone();
            }
        }
        if let Some((pv, pe, pf)) = polish(&e, &f) {
            if std::env::var("QLC_DEBUG_PMAX").is_ok() {
                eprintln!(
                    "candidate: restored infeas {:.2e} certified {certified} polish {pv:.6}",
                    infeasibility(&e, &f, &sc)
                );
            }
            if pv > value {
                value = pv;
                best_e = pe;
                best_f = pf;
            }
        }
    }
    Ok(SolvedPmax {
        value,
        e: best_e,
        f: best_f,
    })
}

/// Best success probability on the first input at ratio q, solved without
/// consulting the admissibility window.
pub fn p_max_raw(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
    q: f64,
) -> Result<f64> {
    let to = pencil_extremes(to1, to2)?;
    Ok(solve_pmax(rho1, rho2, q, to.inf, to.sup)?.value)
}

/// Best success probability on the first input at ratio q. Ratios outside
/// the admissibility window return zero immediately.
pub fn p_max(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
    q: f64,
) -> Result<f64> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(QlcError::invalid(format!(
            "success ratio must be a finite nonnegative number, got {q}"
        )));
    }
    let window = q_window(rho1, rho2, to1, to2)?;
    if !window.contains(q) {
        return Ok(0.0);
    }
    p_max_raw(rho1, rho2, to1, to2, q)
}

/// A three-outcome conversion instrument: two success branches with their
/// prepared states and a failure branch preparing the second target.
#[derive(Clone, Debug)]
pub struct ProbChannel {
    effect_a: HermitianMatrix,
    effect_b: HermitianMatrix,
    on_a: DensityMatrix,
    on_b: DensityMatrix,
    on_fail: DensityMatrix,
}

impl ProbChannel {
    pub fn effects(&self) -> (&HermitianMatrix, &HermitianMatrix) {
        (&self.effect_a, &self.effect_b)
    }

    pub fn preparations(&self) -> (&DensityMatrix, &DensityMatrix, &DensityMatrix) {
        (&self.on_a, &self.on_b, &self.on_fail)
    }

    pub fn success_prob(&self, rho: &DensityMatrix) -> Result<f64> {
        let e = rho.expect(&self.effect_a)?;
        let f = rho.expect(&self.effect_b)?;
        Ok((e + f).clamp(0.0, 1.0))
    }

    /// Normalized post-state conditioned on success.
    pub fn apply_success(&self, rho: &DensityMatrix) -> Result<(f64, DensityMatrix)> {
        let pe = rho.expect(&self.effect_a)?.max(0.0);
        let pf = rho.expect(&self.effect_b)?.max(0.0);
        let p = pe + pf;
        if p <= 1e-14 {
            return Err(QlcError::Infeasible(
                "success probability vanishes on this input".into(),
            ));
        }
        let mix = self
            .on_a
            .as_hermitian()
            .scale(pe / p)
            .add(&self.on_b.as_hermitian().scale(pf / p))?;
        Ok((p, DensityMatrix::new(mix)?))
    }

    /// Unconditional output including the failure branch.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let pe = rho.expect(&self.effect_a)?.clamp(0.0, 1.0);
        let pf = rho.expect(&self.effect_b)?.clamp(0.0, 1.0);
        let pfail = (1.0 - pe - pf).max(0.0);
        let mix = self
            .on_a
            .as_hermitian()
            .scale(pe)
            .add(&self.on_b.as_hermitian().scale(pf))?
            .add(&self.on_fail.as_hermitian().scale(pfail))?;
        DensityMatrix::new(mix)
    }
}

/// Rebuild a nearly-positive Hermitian matrix as a state.
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

/// Solve for the instrument achieving p_max at ratio q. The two success
/// effects come out of the solver; the prepared states invert the mixing
/// system, with the branches swapped when the solver labels them in the
/// opposite likelihood order.
pub fn prob_construct(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
    q: f64,
) -> Result<ProbChannel> {
    if to1.dim() != to2.dim() {
        return Err(QlcError::DimMismatch {
            left: to1.dim(),
            right: to2.dim(),
        });
    }
    let window = q_window(rho1, rho2, to1, to2)?;
    if !window.contains(q) {
        return Err(QlcError::Infeasible(format!(
            "ratio {q} lies outside the admissible window"
        )));
    }
    let to = pencil_extremes(to1, to2)?;
    let solved = solve_pmax(rho1, rho2, q, to.inf, to.sup)?;
    if solved.value <= 1e-10 {
        return Err(QlcError::Infeasible(
            "the best success probability at this ratio is zero".into(),
        ));
    }
    let mut e = solved.e;
    let mut f = solved.f;
    let stats = |x: &DMatrix<C64>| {
        (
            real_inner(x, rho1.as_hermitian().as_matrix()),
            real_inner(x, rho2.as_hermitian().as_matrix()),
        )
    };
    let (mut e1, mut e2) = stats(&e);
    let (mut f1, mut f2) = stats(&f);
    // orientation: the inversion below needs e1 f2 - e2 f1 > 0
    if e1 * f2 - e2 * f1 < 0.0 {
        std::mem::swap(&mut e, &mut f);
        std::mem::swap(&mut e1, &mut f1);
        std::mem::swap(&mut e2, &mut f2);
    }
    let denom = e1 * f2 - e2 * f1;
    if std::env::var("QLC_DEBUG_PMAX").is_ok() {
        eprintln!(
            "construct: e1 {e1:.6e} e2 {e2:.6e} f1 {f1:.6e} f2 {f2:.6e} denom {denom:.6e} value {:.6}",
            solved.value
        );
    }
    if denom.abs() <= 1e-12 {
        return Err(QlcError::Infeasible(format!(
            "success branches are statistically collinear: determinant {denom:e}"
        )));
    }
    let p1 = e1 + f1;
    let p2 = e2 + f2;
    let on_a = clamp_state(
        &to1.as_hermitian()
            .scale(f2 * p1 / denom)
            .sub(&to2.as_hermitian().scale(f1 * p2 / denom))?,
    )?;
    let on_b = clamp_state(
        &to2.as_hermitian()
            .scale(e1 * p2 / denom)
            .sub(&to1.as_hermitian().scale(e2 * p1 / denom))?,
    )?;
    Ok(ProbChannel {
        effect_a: HermitianMatrix::from_symmetric_parts(e),
        effect_b: HermitianMatrix::from_symmetric_parts(f),
        on_a,
        on_b,
        on_fail: to2.clone(),
    })
}

/// Residual of the conversion claim at ratio q: distance of both
/// success-conditioned outputs from their targets plus the ratio mismatch.
pub fn conversion_residual(
    ch: &ProbChannel,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    to1: &DensityMatrix,
    to2: &DensityMatrix,
    q: f64,
) -> Result<f64> {
    let (p1, out1) = ch.apply_success(rho1)?;
    let (p2, out2) = ch.apply_success(rho2)?;
    let ratio_err = if p2 > 1e-14 {
        (p1 - q * p2).abs()
    } else {
        p1.abs()
    };
    Ok(out1.trace_distance(to1)? + out2.trace_distance(to2)? + ratio_err)
}

/// Verdict band applied to a window membership query, for reporting.
pub fn window_verdict(window: &QWindow, q: f64) -> Verdict {
    let lo_gap = if window.lo.is_finite() {
        q - window.lo
    } else {
        f64::NEG_INFINITY
    };
    let hi_gap = match window.hi {
        ExtReal::Inf => f64::INFINITY,
        ExtReal::Finite(h) => h - q,
    };
    Verdict::from_gap(lo_gap.min(hi_gap))
}
