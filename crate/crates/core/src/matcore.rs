//! Hermitian and density matrix types plus the spectral primitives the rest
//! of the crate is built on.
//!
//! Conventions, fixed here once:
//!
//! | item                 | convention                                        |
//! |----------------------|---------------------------------------------------|
//! | storage              | dense column-major `DMatrix<Complex<f64>>`        |
//! | Hermitian adoption   | symmetrize (A + A')/2, reject residual > 1e-10    |
//! | eigenvalues          | ascending, eigenvectors orthonormal as columns    |
//! | density eigenvalues  | clamped to 0 from -1e-10, rejected below          |
//! | density trace        | renormalized to 1 at construction                 |
//! | support              | eigenvalues above 1e-10 x largest eigenvalue      |
//! | pencil sup(rho/sigma)| +inf iff rho leaks outside supp(sigma)            |
//!
//! The pencil extremes of a pair are the two numbers everything downstream
//! keeps asking for: sup(rho/sigma) = inf{ t : t sigma - rho >= 0 } and
//! inf(rho/sigma) = sup{ t : rho - t sigma >= 0 }. The minimum is computed
//! through the exact reciprocal identity inf(rho/sigma) = 1/sup(sigma/rho),
//! which stays correct for rank-deficient inputs where a naive restricted
//! eigenvalue does not.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{QlcError, Result};
use crate::tol;

pub type C64 = Complex<f64>;

/// A real value extended with an explicit +inf marker. Decision code matches
/// on the variant instead of trusting IEEE infinities through arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Inf,
}

impl ExtReal {
    pub fn from_f64(x: f64) -> Self {
        debug_assert!(!x.is_nan(), "ExtReal from NaN");
        if x.is_infinite() {
            ExtReal::Inf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::Inf => f64::INFINITY,
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, ExtReal::Inf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Inf => None,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Inf => write!(f, "inf"),
        }
    }
}

/// Dense Hermitian matrix. The stored matrix equals its own adjoint up to
/// rounding; construction symmetrizes and enforces that.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: DMatrix<C64>,
}

/// Spectral decomposition with ascending eigenvalues; `vectors` holds the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Adopts a raw matrix as Hermitian: symmetrizes (A + A')/2 and rejects
    /// inputs whose anti-Hermitian part exceeds the tolerance relative to the
    /// largest entry.
    pub fn new(raw: DMatrix<C64>) -> Result<Self> {
        if raw.nrows() != raw.ncols() {
            return Err(QlcError::DimMismatch {
                left: raw.nrows(),
                right: raw.ncols(),
            });
        }
        if raw.nrows() == 0 {
            return Err(QlcError::invalid("empty matrix"));
        }
        let adj = raw.adjoint();
        let scale = raw
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        let residual = (&raw - &adj).iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if residual > tol::HERMITIAN_SYM * scale {
            return Err(QlcError::NotHermitian { residual });
        }
        let m = (raw + adj).scale(0.5);
        Ok(HermitianMatrix { m })
    }

    /// Wraps a matrix that is Hermitian by construction (no residual check,
    /// still symmetrized to keep the invariant bit-tight).
    pub(crate) fn from_symmetric_parts(raw: DMatrix<C64>) -> Self {
        let adj = raw.adjoint();
        HermitianMatrix {
            m: (raw + adj).scale(0.5),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        HermitianMatrix { m }
    }

    /// Rank-one projector |v><v| / <v|v>.
    pub fn projector_onto(v: &[C64]) -> Result<Self> {
        let dim = v.len();
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(QlcError::invalid("zero vector has no projector"));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj() / norm2;
            }
        }
        Ok(HermitianMatrix { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(other)?;
        Ok(HermitianMatrix {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(other)?;
        Ok(HermitianMatrix {
            m: &self.m - &other.m,
        })
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix {
            m: self.m.scale(s),
        }
    }

    /// Hilbert-Schmidt pairing Tr[A B]; real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> Result<f64> {
        self.check_dim(other)?;
        // Tr[AB] = sum_ij A_ij B_ji; rounding can leave a stray imaginary
        // part, keep the real component.
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += (self.m[(i, j)] * other.m[(j, i)]).re;
            }
        }
        Ok(acc)
    }

    /// Largest entry magnitude; scale reference for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &HermitianMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(QlcError::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// Eigenvalues only, ascending. Closed form at dim 2, full solve above.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 2 {
            // (a+c)/2 +- sqrt(((a-c)/2)^2 + |b|^2): cancellation-free unlike
            // the trace/determinant discriminant.
            let a = self.m[(0, 0)].re;
            let c = self.m[(1, 1)].re;
            let mid = 0.5 * (a + c);
            let half = (0.5 * (a - c)).hypot(self.m[(0, 1)].norm());
            return vec![mid - half, mid + half];
        }
        let mut vals: Vec<f64> = self.m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    pub fn eig(&self) -> EigDecomposition {
        eig_hermitian(self)
    }

    pub fn positive_part(&self) -> HermitianMatrix {
        positive_part(self)
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm(self)
    }

    pub fn support_projector(&self) -> HermitianMatrix {
        support_projector(self)
    }

    /// A * B as a plain matrix product (not Hermitian in general).
    pub fn mul_raw(&self, other: &HermitianMatrix) -> DMatrix<C64> {
        &self.m * &other.m
    }

    /// Sandwich S * A * S for Hermitian S (result is Hermitian).
    pub(crate) fn sandwich(&self, s: &DMatrix<C64>) -> HermitianMatrix {
        HermitianMatrix::from_symmetric_parts(s * &self.m * s)
    }
}

/// Density matrix: Hermitian, positive semidefinite up to the clamp
/// tolerance, unit trace after renormalization at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    h: HermitianMatrix,
}

impl DensityMatrix {
    /// Validates and normalizes. Eigenvalues in [-1e-10, 0) are clamped to
    /// zero (the matrix is rebuilt from the clamped spectrum when any clamp
    /// fires); anything below the clamp window is rejected.
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let eig = h.eig();
        let min_eig = eig.values[0];
        let scale = eig.values.last().copied().unwrap_or(0.0).abs().max(1.0);
        if min_eig < -tol::EIG_CLAMP * scale {
            return Err(QlcError::NotPositive { min_eig });
        }
        let needs_clamp = min_eig < 0.0;
        let mut values = eig.values.clone();
        if needs_clamp {
            for v in values.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let trace: f64 = values.iter().sum();
        if !(trace > 0.0) {
            return Err(QlcError::BadTrace { trace });
        }
        let h = if needs_clamp || (trace - 1.0).abs() > f64::EPSILON {
            rebuild(&eig.vectors, &values, 1.0 / trace)
        } else {
            h
        };
        Ok(DensityMatrix { h })
    }

    /// Diagonal state from a probability vector (renormalized; negative
    /// entries rejected).
    pub fn from_probs(p: &[f64]) -> Result<Self> {
        if p.iter().any(|&x| x < -tol::EIG_CLAMP) {
            return Err(QlcError::NotPositive {
                min_eig: p.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        let total: f64 = p.iter().map(|&x| x.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(QlcError::BadTrace { trace: total });
        }
        let diag: Vec<f64> = p.iter().map(|&x| x.max(0.0) / total).collect();
        Ok(DensityMatrix {
            h: HermitianMatrix::from_diagonal(&diag),
        })
    }

    /// Pure state |v><v| (v renormalized).
    pub fn pure(v: &[C64]) -> Result<Self> {
        Ok(DensityMatrix {
            h: HermitianMatrix::projector_onto(v)?,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            h: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.h.entry(i, j)
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.h
    }

    /// Tr[E rho] for an observable/effect E.
    pub fn expect(&self, e: &HermitianMatrix) -> Result<f64> {
        self.h.inner(e)
    }

    /// Trace distance (1/2)||rho - sigma||_1.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        Ok(0.5 * self.h.sub(&other.h)?.trace_norm())
    }
}

fn rebuild(vectors: &DMatrix<C64>, values: &[f64], scale: f64) -> HermitianMatrix {
    let dim = vectors.nrows();
    let mut d = DMatrix::zeros(dim, dim);
    for (i, &v) in values.iter().enumerate() {
        d[(i, i)] = C64::new(v * scale, 0.0);
    }
    HermitianMatrix::from_symmetric_parts(vectors * d * vectors.adjoint())
}

/// Extremes of the operator pencil of a state pair.
///
/// `sup` = sup(rho/sigma) = inf{ t >= 0 : t sigma - rho >= 0 }, +inf when rho
/// has mass outside supp(sigma). `inf` = inf(rho/sigma) = sup{ t >= 0 :
/// rho - t sigma >= 0 } = 1/sup(sigma/rho), zero when sigma leaks outside
/// supp(rho). For unit-trace pairs inf <= 1 <= sup.
#[derive(Clone, Copy, Debug)]
pub struct PencilExtremes {
    pub inf: f64,
    pub sup: ExtReal,
}

/// Full spectral decomposition, eigenvalues ascending.
pub fn eig_hermitian(h: &HermitianMatrix) -> EigDecomposition {
    let se = h.m.clone().symmetric_eigen();
    let dim = h.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    EigDecomposition { values, vectors }
}

/// Projection of H onto its positive eigenspaces: V max(Lambda, 0) V'.
pub fn positive_part(h: &HermitianMatrix) -> HermitianMatrix {
    let eig = eig_hermitian(h);
    let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    rebuild(&eig.vectors, &clipped, 1.0)
}

/// Trace norm ||H||_1 = sum of |eigenvalues|.
pub fn trace_norm(h: &HermitianMatrix) -> f64 {
    h.eigenvalues().iter().map(|v| v.abs()).sum()
}

/// Projector onto the span of eigenvectors with eigenvalue above the relative
/// support threshold. Zero matrix maps to the zero projector.
pub fn support_projector(h: &HermitianMatrix) -> HermitianMatrix {
    let eig = eig_hermitian(h);
    let top = eig.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return HermitianMatrix::zeros(h.dim());
    }
    let cut = tol::SUPPORT_REL * top;
    let flags: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v > cut { 1.0 } else { 0.0 })
        .collect();
    rebuild(&eig.vectors, &flags, 1.0)
}

/// sup(rho/sigma) alone, as an extended real.
pub fn sup_ratio(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<ExtReal> {
    if rho.dim() != sigma.dim() {
        return Err(QlcError::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let eig = sigma.as_hermitian().eig();
    let top = eig.values.last().copied().unwrap_or(0.0);
    let cut = tol::SUPPORT_REL * top.max(0.0);
    let dim = rho.dim();

    // Support projector and pseudo inverse square root of sigma in one pass.
    let mut proj_vals = vec![0.0; dim];
    let mut isqrt_vals = vec![0.0; dim];
    for (i, &v) in eig.values.iter().enumerate() {
        if v > cut {
            proj_vals[i] = 1.0;
            isqrt_vals[i] = 1.0 / v.sqrt();
        }
    }
    let proj = rebuild(&eig.vectors, &proj_vals, 1.0);
    let leak = 1.0 - rho.expect(&proj)?;
    if leak > tol::SUPPORT_LEAK {
        return Ok(ExtReal::Inf);
    }
    let isqrt = rebuild(&eig.vectors, &isqrt_vals, 1.0);
    let pencil = rho.as_hermitian().sandwich(isqrt.as_matrix());
    let sup = pencil.eigenvalues().last().copied().unwrap_or(0.0);
    Ok(ExtReal::Finite(sup))
}

/// Finite generalized eigenvalues of the pencil (rho, sigma): the spectrum
/// of the compression of sigma^{-1/2} rho sigma^{-1/2} to the support of
/// sigma, ascending. Directions outside that support carry no finite
/// crossing and are excluded; when rho has weight there the pencil also has
/// an infinite branch, which callers detect through `sup_ratio`.
pub fn pencil_eigenvalues(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Vec<f64>> {
    if rho.dim() != sigma.dim() {
        return Err(QlcError::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let eig = sigma.as_hermitian().eig();
    let top = eig.values.last().copied().unwrap_or(0.0);
    let cut = tol::SUPPORT_REL * top.max(0.0);
    let dim = rho.dim();
    let mut isqrt_vals = vec![0.0; dim];
    let mut rank = 0usize;
    for (i, &v) in eig.values.iter().enumerate() {
        if v > cut {
            isqrt_vals[i] = 1.0 / v.sqrt();
            rank += 1;
        }
    }
    let isqrt = rebuild(&eig.vectors, &isqrt_vals, 1.0);
    let pencil = rho.as_hermitian().sandwich(isqrt.as_matrix());
    let spectrum = pencil.eigenvalues();
    // the sandwich has dim - rank artifact zeros from the kernel of sigma
    let mut vals: Vec<f64> = spectrum.iter().map(|&v| v.max(0.0)).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals.split_off(dim - rank))
}

/// Both pencil extremes of (rho, sigma). The minimum is 1/sup(sigma/rho),
/// exact for all positive semidefinite pairs, with 1/inf = 0.
pub fn pencil_extremes(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<PencilExtremes> {
    let sup = sup_ratio(rho, sigma)?;
    let inf = match sup_ratio(sigma, rho)? {
        ExtReal::Inf => 0.0,
        ExtReal::Finite(s) => {
            debug_assert!(s > 0.0, "sup(sigma/rho) must be >= 1 for states");
            1.0 / s
        }
    };
    Ok(PencilExtremes { inf, sup })
}
