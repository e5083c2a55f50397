//! Thermal references and two-level conversion criteria.
//!
//! A Gibbs reference is a diagonal state with weights exp(-beta E_i)/Z. For
//! a qubit state rho = [[a, c], [conj(c), 1 - a]] (ground level first) and
//! reference gamma = diag(p, 1 - p), the pencil extremes of (rho, gamma)
//! have the closed form
//!
//!   (r0 + r1)/2 -+ sqrt((r0 - r1)^2 + 4 r0 r1 k^2)/2,
//!   r0 = a/p, r1 = (1 - a)/(1 - p), k = |c| / sqrt(a (1 - a)),
//!
//! used both as a fast path and as an independent check of the spectral
//! route. At zero temperature the reference is the ground projector, the
//! upper extreme diverges whenever rho has excited mass, and the lower one
//! collapses to det(rho)/(1 - a).
//!
//! For qubit pairs sharing one reference the interval test
//! [m_to, M_to] inside [m_from, M_from] decides convertibility outright:
//! the determinant of rho - t gamma is quadratic in t with the same leading
//! coefficient on both sides, so the norm comparison reduces to the window
//! endpoints. The general qubit-pair criterion keeps the quadratic
//! determinant chain and is provided separately.

use crate::classical::gibbs_weights;
use crate::error::{QlcError, Result};
use crate::matcore::{pencil_extremes, support_projector, DensityMatrix, ExtReal, HermitianMatrix};
use crate::{tol, Verdict};

/// Reference threshold: a ground weight this close to 1 is treated as zero
/// temperature, where the reference loses rank.
const ZERO_TEMP: f64 = 1e-12;

/// Diagonal thermal reference defined by a spectrum and inverse temperature
/// (+inf allowed). Weights are fixed at construction.
#[derive(Clone, Debug)]
pub struct GibbsSpec {
    energies: Vec<f64>,
    beta: f64,
    weights: Vec<f64>,
}

impl GibbsSpec {
    pub fn new(energies: &[f64], beta: f64) -> Result<Self> {
        let weights = gibbs_weights(energies, beta)?;
        Ok(GibbsSpec {
            energies: energies.to_vec(),
            beta,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::from_probs(&self.weights).expect("thermal weights form a state")
    }

    /// Index of the lowest energy level (first one on ties).
    pub fn ground_index(&self) -> usize {
        let mut g = 0;
        for (i, &e) in self.energies.iter().enumerate() {
            if e < self.energies[g] {
                g = i;
            }
        }
        g
    }

    /// True when the ground weight has absorbed all mass at working
    /// precision, so the reference is rank deficient.
    pub fn is_zero_temperature(&self) -> bool {
        self.weights[self.ground_index()] >= 1.0 - ZERO_TEMP
    }
}

/// Thermal state for a spectrum at inverse temperature beta.
pub fn gibbs_state(energies: &[f64], beta: f64) -> Result<DensityMatrix> {
    Ok(GibbsSpec::new(energies, beta)?.state())
}

/// Phase-normalized qubit data: ground population `a` (entry 0, 0) and the
/// scaled coherence `coh` = |off-diagonal| / sqrt(a (1 - a)), in [0, 1],
/// zero when either population vanishes. The discarded phase is removable
/// by an energy-conserving rotation and affects no pencil quantity.
#[derive(Clone, Copy, Debug)]
pub struct QubitBlock {
    pub a: f64,
    pub coh: f64,
}

pub fn normalize_qubit_phase(rho: &DensityMatrix) -> Result<QubitBlock> {
    if rho.dim() != 2 {
        return Err(QlcError::invalid(format!(
            "qubit operation on dimension {}",
            rho.dim()
        )));
    }
    let a = rho.entry(0, 0).re.clamp(0.0, 1.0);
    let off = rho.entry(0, 1).norm();
    let scale = (a * (1.0 - a)).sqrt();
    let coh = if scale <= 1e-15 {
        0.0
    } else {
        (off / scale).clamp(0.0, 1.0)
    };
    Ok(QubitBlock { a, coh })
}

/// Closed-form pencil extremes (min, max) of a phase-normalized qubit state
/// against diag(p, 1 - p), for p strictly inside (0, 1).
pub fn qubit_pencil(a: f64, coh: f64, p: f64) -> (f64, f64) {
    let r0 = a / p;
    let r1 = (1.0 - a) / (1.0 - p);
    let mid = 0.5 * (r0 + r1);
    let half = 0.5 * ((r0 - r1).hypot(2.0 * (r0 * r1).sqrt() * coh));
    ((mid - half).max(0.0), mid + half)
}

/// Pencil summary of a qubit state against a thermal reference.
#[derive(Clone, Copy, Debug)]
pub struct ThermalPencil {
    /// Largest s with rho >= s gamma.
    pub inf: f64,
    /// Smallest s with rho <= s gamma; infinite when rho has mass outside
    /// the reference support.
    pub sup: ExtReal,
    /// Population of the reference's support block, Tr[rho P_gamma].
    pub ground_mass: f64,
}

/// Pencil extremes of (rho, gamma) through the closed forms, with the
/// zero-temperature branches. The state is taken in the energy eigenbasis
/// of the reference.
pub fn thermal_pencil(rho: &DensityMatrix, gibbs: &GibbsSpec) -> Result<ThermalPencil> {
    if rho.dim() != 2 || gibbs.dim() != 2 {
        return Err(QlcError::invalid(
            "thermal pencil analysis covers two-level systems",
        ));
    }
    let g = gibbs.ground_index();
    let p = gibbs.weights()[g];
    let a = rho.entry(g, g).re.clamp(0.0, 1.0);
    let off = rho.entry(0, 1).norm();

    if p >= 1.0 - ZERO_TEMP {
        // reference collapses onto the ground level
        if 1.0 - a <= ZERO_TEMP {
            return Ok(ThermalPencil {
                inf: a / p,
                sup: ExtReal::Finite(a / p),
                ground_mass: a,
            });
        }
        let det = (rho.entry(0, 0).re * rho.entry(1, 1).re - off * off).max(0.0);
        return Ok(ThermalPencil {
            inf: det / (1.0 - a),
            sup: ExtReal::Inf,
            ground_mass: a,
        });
    }

    let scale = (a * (1.0 - a)).sqrt();
    let coh = if scale <= 1e-15 {
        0.0
    } else {
        (off / scale).clamp(0.0, 1.0)
    };
    let (m, mm) = qubit_pencil(a, coh, p);
    Ok(ThermalPencil {
        inf: m,
        sup: ExtReal::Finite(mm),
        ground_mass: a,
    })
}

/// Outcome of a thermal conversion query.
#[derive(Clone, Copy, Debug)]
pub struct ConversionReport {
    pub verdict: Verdict,
    pub from: ThermalPencil,
    pub to: ThermalPencil,
    /// Smallest slack among the deciding inequalities.
    pub min_gap: f64,
}

/// Can `from` reach `to` by a channel fixing the thermal reference? For
/// two-level systems the window test is exact: the target's pencil window
/// must nest inside the source's, and at zero temperature the edge
/// comparison becomes the ground-mass ordering.
pub fn gibbs_convertible(
    from: &DensityMatrix,
    to: &DensityMatrix,
    gibbs: &GibbsSpec,
) -> Result<ConversionReport> {
    let pf = thermal_pencil(from, gibbs)?;
    let pt = thermal_pencil(to, gibbs)?;
    let gap_low = pt.inf - pf.inf;
    let gap_edge = match (pf.sup, pt.sup) {
        (ExtReal::Finite(mf), ExtReal::Finite(mt)) => mf - mt,
        (ExtReal::Inf, ExtReal::Inf) => pt.ground_mass - pf.ground_mass,
        // target confined to the reference support while the source leaks:
        // the upper edge imposes nothing
        (ExtReal::Inf, ExtReal::Finite(_)) => f64::INFINITY,
        // source confined, target leaking: unreachable
        (ExtReal::Finite(_), ExtReal::Inf) => f64::NEG_INFINITY,
    };
    let min_gap = gap_low.min(gap_edge);
    Ok(ConversionReport {
        verdict: Verdict::from_gap(min_gap),
        from: pf,
        to: pt,
        min_gap,
    })
}

fn det2(h: &HermitianMatrix) -> f64 {
    (h.entry(0, 0) * h.entry(1, 1) - h.entry(0, 1) * h.entry(1, 0)).re
}

/// Quadratic t -> det(x1 - t x2) for 2x2 Hermitian pairs, as coefficients
/// (c0, c1, c2) of 1, t, t^2.
fn det_pencil_coeffs(x1: &HermitianMatrix, x2: &HermitianMatrix) -> (f64, f64, f64) {
    let c0 = det2(x1);
    let c2 = det2(x2);
    let cross = x1.trace() * x2.trace() - x1.inner(x2).expect("dims match");
    (c0, -cross, c2)
}

/// Existence of a channel taking the qubit pair (rho1, rho2) to the qubit
/// pair (sigma1, sigma2): the target window must nest inside the source
/// window and the determinant of sigma1 - t sigma2 must dominate that of
/// rho1 - t rho2 across the target window. The determinant difference is a
/// quadratic, so the scan is exact: endpoints plus an interior stationary
/// point, with sign analysis of the leading coefficient when the window is
/// unbounded.
pub fn alberti_uhlmann_exists(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma1: &DensityMatrix,
    sigma2: &DensityMatrix,
) -> Result<ConversionReport> {
    for s in [rho1, rho2, sigma1, sigma2] {
        if s.dim() != 2 {
            return Err(QlcError::invalid(
                "the pairwise conversion criterion covers two-level systems",
            ));
        }
    }
    let ext_r = pencil_extremes(rho1, rho2)?;
    let ext_s = pencil_extremes(sigma1, sigma2)?;
    let pf = summarize(rho1, rho2, &ext_r)?;
    let pt = summarize(sigma1, sigma2, &ext_s)?;

    let gap_low = ext_s.inf - ext_r.inf;
    let gap_high = match (ext_r.sup, ext_s.sup) {
        (ExtReal::Finite(mr), ExtReal::Finite(ms)) => mr - ms,
        (ExtReal::Inf, ExtReal::Inf) => f64::INFINITY, // decided by the chain slope
        (ExtReal::Inf, ExtReal::Finite(_)) => f64::INFINITY,
        (ExtReal::Finite(_), ExtReal::Inf) => f64::NEG_INFINITY,
    };

    let (r0, r1, r2) = det_pencil_coeffs(rho1.as_hermitian(), rho2.as_hermitian());
    let (s0, s1, s2) = det_pencil_coeffs(sigma1.as_hermitian(), sigma2.as_hermitian());
    let (c0, c1, c2) = (s0 - r0, s1 - r1, s2 - r2);
    let chain = |t: f64| c0 + t * (c1 + t * c2);

    let lo = ext_s.inf;
    let gap_chain = match ext_s.sup {
        ExtReal::Finite(hi) => {
            let mut gap = chain(lo).min(chain(hi));
            if c2.abs() > tol::TIE {
                let stat = -c1 / (2.0 * c2);
                if c2 > 0.0 && stat > lo && stat < hi {
                    gap = gap.min(chain(stat));
                }
            }
            gap
        }
        ExtReal::Inf => {
            if c2 > tol::TIE {
                let stat = -c1 / (2.0 * c2);
                let mut gap = chain(lo);
                if stat > lo {
                    gap = gap.min(chain(stat));
                }
                gap
            } else if c2 < -tol::TIE {
                f64::NEG_INFINITY
            } else if c1 < -tol::VERDICT_MARGIN {
                // negative slope on an unbounded window
                f64::NEG_INFINITY
            } else {
                // slope within the tie band is treated as flat
                chain(lo)
            }
        }
    };

    let min_gap = gap_low.min(gap_high).min(gap_chain);
    Ok(ConversionReport {
        verdict: Verdict::from_gap(min_gap),
        from: pf,
        to: pt,
        min_gap,
    })
}

fn summarize(
    s1: &DensityMatrix,
    s2: &DensityMatrix,
    ext: &crate::matcore::PencilExtremes,
) -> Result<ThermalPencil> {
    Ok(ThermalPencil {
        inf: ext.inf,
        sup: ext.sup,
        ground_mass: s1.expect(&support_projector(s2.as_hermitian()))?,
    })
}

/// Compress states sharing a rank <= 2 joint support into an explicit
/// two-level block, so the qubit criteria apply to states handed over in a
/// larger ambient space. Fails when the joint support needs more than two
/// dimensions. All inputs must share the ambient dimension; outputs are in
/// the induced block basis, in input order.
pub fn project_gibbs_block(
    states: &[&DensityMatrix],
) -> Result<Vec<DensityMatrix>> {
    if states.is_empty() {
        return Err(QlcError::invalid("no states to compress"));
    }
    let dim = states[0].dim();
    for s in states {
        if s.dim() != dim {
            return Err(QlcError::DimMismatch {
                left: dim,
                right: s.dim(),
            });
        }
    }
    if dim < 2 {
        return Err(QlcError::invalid("ambient dimension below two"));
    }
    let mut mix = states[0].as_hermitian().clone();
    for s in &states[1..] {
        mix = mix.add(s.as_hermitian())?;
    }
    let mix = mix.scale(1.0 / states.len() as f64);
    let eig = crate::matcore::eig_hermitian(&mix);
    let top = eig.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(QlcError::invalid("states have no joint support"));
    }
    let cut = tol::SUPPORT_REL * top;
    let live: Vec<usize> = (0..dim).filter(|&i| eig.values[i] > cut).collect();
    if live.len() > 2 {
        return Err(QlcError::invalid(format!(
            "joint support spans {} dimensions, need at most two",
            live.len()
        )));
    }
    // pad a rank-one support with the next basis direction so the block is
    // always an honest qubit
    let mut basis: Vec<usize> = live;
    let mut fill = dim;
    while basis.len() < 2 {
        fill -= 1;
        if !basis.contains(&fill) {
            basis.push(fill);
        }
    }
    basis.sort_unstable();

    let mut out = Vec::with_capacity(states.len());
    for s in states {
        let mut block = nalgebra::DMatrix::zeros(2, 2);
        for (bi, &i) in basis.iter().enumerate() {
            for (bj, &j) in basis.iter().enumerate() {
                let mut acc = num_complex::Complex::new(0.0, 0.0);
                for r in 0..dim {
                    for c in 0..dim {
                        acc += eig.vectors[(r, i)].conj() * s.entry(r, c) * eig.vectors[(c, j)];
                    }
                }
                block[(bi, bj)] = acc;
            }
        }
        out.push(DensityMatrix::new(HermitianMatrix::new(block)?)?);
    }
    Ok(out)
}
