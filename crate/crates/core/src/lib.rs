//! Numerical toolkit for comparing pairs of density matrices.
//!
//! The central object is the testing region of a pair (rho1, rho2): the set of
//! points (Tr[E rho2], Tr[E rho1]) over all effects 0 <= E <= 1. Its upper
//! boundary is the relative Lorenz curve of the pair. Everything else in the
//! crate is a functional of that region or a decision procedure built on it:
//!
//! - [`matcore`]: Hermitian/density matrix types, spectral primitives and
//!   operator pencil extremes. All other modules sit on top of it.
//! - [`divergence`]: Hilbert alpha-divergences, max/min relative entropies,
//!   the Hilbert projective metric and hypothesis-testing quantities.
//! - [`lorenz`]: curve construction and the relative majorization decision.
//! - [`classical`]: probability-vector specializations (exact vertex forms).
//! - [`athermality`]: Gibbs states and two-level thermal conversion criteria.
//! - [`channels`]: existence and construction of test-and-prepare channels.
//! - [`probabilistic`]: probabilistic conversions and their success optimum.
//! - [`verify`]: seeded generators used by the test batteries and the CLI.
//!
//! Verdict-producing operations return a three-valued outcome instead of a
//! bool: the underlying conditions are closed inequalities evaluated in
//! floating point, so a declared tie band is part of the contract.

pub mod athermality;
pub mod channels;
pub mod classical;
pub mod divergence;
pub mod error;
pub mod lorenz;
pub mod matcore;
pub mod probabilistic;
pub mod verify;

mod opt;

pub use error::{QlcError, Result};

/// Outcome of a tolerance-banded decision. `Holds` and `Fails` are certified
/// up to the band in [`tol`]; `Marginal` means the deciding gap landed inside
/// the band and neither side can be certified at working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Marginal,
    Fails,
}

impl Verdict {
    /// Bands a signed slack: nonnegative up to [`tol::TIE`] holds, below
    /// the negative of [`tol::VERDICT_MARGIN`] fails, between is marginal.
    pub fn from_gap(gap: f64) -> Self {
        if gap >= -tol::TIE {
            Verdict::Holds
        } else if gap <= -tol::VERDICT_MARGIN {
            Verdict::Fails
        } else {
            Verdict::Marginal
        }
    }

    /// Conjunction: a chain of conditions holds only when every link does,
    /// fails as soon as one fails, and is otherwise marginal.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fails, _) | (_, Fails) => Fails,
            (Holds, Holds) => Holds,
            _ => Marginal,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "Holds",
            Verdict::Marginal => "Marginal",
            Verdict::Fails => "Fails",
        })
    }
}

/// Centralized tolerances. Every comparison threshold in the crate routes
/// through one of these so the numeric contract lives in a single place.
pub mod tol {
    /// Max allowed anti-Hermitian residual (relative to the largest entry)
    /// when adopting a raw matrix as Hermitian.
    pub const HERMITIAN_SYM: f64 = 1e-10;
    /// Eigenvalues of a density matrix may undershoot zero by this much and
    /// are clamped; anything lower is rejected.
    pub const EIG_CLAMP: f64 = 1e-10;
    /// Relative eigenvalue threshold (times the largest eigenvalue) for
    /// support membership.
    pub const SUPPORT_REL: f64 = 1e-10;
    /// Mass a state may leak outside another state's support before the
    /// pencil ratio is declared infinite.
    pub const SUPPORT_LEAK: f64 = 1e-9;
    /// Half-width of the verdict band: a condition gap at or below the
    /// negative of this is a certified failure.
    pub const VERDICT_MARGIN: f64 = 1e-9;
    /// Ties: gaps no worse than the negative of this count as holding. The
    /// decision conditions are closed, so an exact tie is a pass and only the
    /// sliver between TIE and VERDICT_MARGIN is reported as marginal.
    pub const TIE: f64 = 1e-12;
    /// Hypothesis-testing optima at or below this are reported as exactly
    /// zero: the objective is assembled from unit-scale trace norms, so
    /// smaller values are rounding residue, not signal.
    pub const Q_FLOOR: f64 = 1e-14;
    /// Absolute bracket width at which bisection stops.
    pub const BISECT: f64 = 1e-12;
    /// Absolute bracket width at which golden-section search stops.
    pub const GOLDEN: f64 = 1e-12;
    /// Iteration cap for bisection.
    pub const BISECT_CAP: usize = 200;
    /// Iteration cap for golden-section search.
    pub const GOLDEN_CAP: usize = 300;
}
