//! Seeded generators for states, channels and effects.
//!
//! Everything here is a pure function of its seed: the generator is a
//! stream-cipher RNG (ChaCha8), so draws are identical across platforms and
//! runs. The acceptance batteries and the CLI's state-gen/region-sample
//! commands are built on these.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{QlcError, Result};
use crate::matcore::{positive_part, support_projector, C64, DensityMatrix, HermitianMatrix};

/// Deterministic random source; a thin wrapper so call sites never touch the
/// RNG crate surface directly.
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Complex standard normal with E|z|^2 = 1.
    pub fn complex_normal(&mut self) -> C64 {
        let re: f64 = self.standard_normal();
        let im: f64 = self.standard_normal();
        C64::new(re, im).scale(0.5f64.sqrt())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Matrix of i.i.d. complex standard normals.
    pub fn ginibre(&mut self, rows: usize, cols: usize) -> DMatrix<C64> {
        DMatrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }
}

/// Ginibre-induced random state: G G' / Tr[G G'].
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut src = RandomSource::new(seed);
    random_density_from(&mut src, dim)
}

pub fn random_density_from(src: &mut RandomSource, dim: usize) -> DensityMatrix {
    let g = src.ginibre(dim, dim);
    let h = HermitianMatrix::from_symmetric_parts(&g * g.adjoint());
    DensityMatrix::new(h).expect("Ginibre square is positive semidefinite")
}

/// Random state with real entries (orthogonal Ginibre); used where a
/// real-parametrized oracle needs real instances.
pub fn random_real_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut src = RandomSource::new(seed);
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(src.standard_normal(), 0.0));
    let h = HermitianMatrix::from_symmetric_parts(&g * g.adjoint());
    DensityMatrix::new(h).expect("Ginibre square is positive semidefinite")
}

/// Completely positive trace-preserving map in Kraus form.
pub struct CptpChannel {
    kraus: Vec<DMatrix<C64>>,
    dim_in: usize,
    dim_out: usize,
}

impl CptpChannel {
    pub fn from_kraus(kraus: Vec<DMatrix<C64>>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| QlcError::invalid("empty Kraus list"))?;
        let (dim_out, dim_in) = (first.nrows(), first.ncols());
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(QlcError::DimMismatch {
                    left: k.nrows(),
                    right: dim_out,
                });
            }
        }
        let chan = CptpChannel {
            kraus,
            dim_in,
            dim_out,
        };
        let resid = chan.completeness_residual();
        if resid > 1e-10 {
            return Err(QlcError::Diagnostic(format!(
                "Kraus completeness residual {resid:e}"
            )));
        }
        Ok(chan)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[DMatrix<C64>] {
        &self.kraus
    }

    /// Max-entry deviation of sum K'K from the identity.
    pub fn completeness_residual(&self) -> f64 {
        let mut acc: DMatrix<C64> = DMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        acc -= DMatrix::<C64>::identity(self.dim_in, self.dim_in);
        acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply_hermitian(&self, h: &HermitianMatrix) -> Result<HermitianMatrix> {
        if h.dim() != self.dim_in {
            return Err(QlcError::DimMismatch {
                left: h.dim(),
                right: self.dim_in,
            });
        }
        let mut acc: DMatrix<C64> = DMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            acc += k * h.as_matrix() * k.adjoint();
        }
        Ok(HermitianMatrix::from_symmetric_parts(acc))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_hermitian(rho.as_hermitian())?)
    }
}

/// Random channel via a Haar-style isometry: QR of a complex Ginibre block,
/// with the R-diagonal phases absorbed so Q is well distributed. Kraus
/// operators are the environment slices of the isometry; completeness is
/// exact by construction (up to rounding).
pub fn random_cptp(dim_in: usize, dim_out: usize, env_dim: usize, seed: u64) -> CptpChannel {
    assert!(dim_in >= 1 && dim_out >= 1 && env_dim >= 1);
    assert!(
        dim_out * env_dim >= dim_in,
        "isometry needs dim_out * env_dim >= dim_in"
    );
    let mut src = RandomSource::new(seed);
    let g = src.ginibre(dim_out * env_dim, dim_in);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim_in {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let scale = phase.conj();
        for i in 0..q.nrows() {
            q[(i, j)] *= scale;
        }
    }
    // row (i, e) of the isometry feeds Kraus operator e at output row i
    let kraus: Vec<DMatrix<C64>> = (0..env_dim)
        .map(|e| DMatrix::from_fn(dim_out, dim_in, |i, j| q[(i * env_dim + e, j)]))
        .collect();
    CptpChannel::from_kraus(kraus).expect("QR isometry is complete")
}

/// Random effect 0 <= E <= 1: a Hermitian draw squashed affinely into [0, 1].
pub fn random_effect(src: &mut RandomSource, dim: usize) -> HermitianMatrix {
    let g = src.ginibre(dim, dim);
    let h = HermitianMatrix::from_symmetric_parts(g);
    let eigs = h.eigenvalues();
    let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
    if hi - lo < 1e-14 {
        return HermitianMatrix::identity(dim).scale(0.5);
    }
    // (H - lo) / (hi - lo), then a random sub-unit scaling so interior
    // effects are covered too
    let scaled = h
        .sub(&HermitianMatrix::identity(dim).scale(lo))
        .unwrap()
        .scale(1.0 / (hi - lo));
    let s = src.uniform(0.0, 1.0);
    let keep_extreme = src.uniform(0.0, 1.0) < 0.5;
    if keep_extreme {
        scaled
    } else {
        scaled.scale(s)
    }
}

/// Sample of the testing region of (rho1, rho2): points (Tr[E rho2],
/// Tr[E rho1]). Includes the trivial effects, random squashed draws and
/// structured draws from eigenprojectors of rho1 - t rho2 (the extreme
/// points), so samples hug the boundary as well as the interior.
pub fn testing_region_sample(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if rho1.dim() != rho2.dim() {
        return Err(QlcError::DimMismatch {
            left: rho1.dim(),
            right: rho2.dim(),
        });
    }
    let dim = rho1.dim();
    let mut src = RandomSource::new(seed);
    let mut points = Vec::with_capacity(n + 2);
    points.push((0.0, 0.0));
    points.push((1.0, 1.0));
    let push = |e: &HermitianMatrix, points: &mut Vec<(f64, f64)>| -> Result<()> {
        points.push((rho2.expect(e)?, rho1.expect(e)?));
        Ok(())
    };
    for k in 0..n {
        if k % 2 == 0 {
            // boundary-flavored draw: positive projector of rho1 - t rho2 at
            // a log-spread t, optionally blended toward its complement
            let t = (10.0f64).powf(src.uniform(-2.0, 1.0));
            let diff = rho1
                .as_hermitian()
                .sub(&rho2.as_hermitian().scale(t))
                .unwrap();
            let proj = support_projector(&positive_part(&diff));
            let theta = src.uniform(0.0, 1.0);
            let blend = if src.uniform(0.0, 1.0) < 0.25 {
                // convex mix with the identity walks the chord toward (1,1)
                proj.scale(1.0 - theta)
                    .add(&HermitianMatrix::identity(dim).scale(theta))
                    .unwrap()
            } else {
                proj
            };
            push(&blend, &mut points)?;
        } else {
            let e = random_effect(&mut src, dim);
            push(&e, &mut points)?;
        }
    }
    Ok(points)
}

/// Exhaustive-ish qubit effect family: E = U diag(e1, e2) U' with the
/// eigenvalues and the Bloch angles of U on uniform grids. resolution r
/// yields r^2 bases x r^2 spectra; r = 2 already contains 0, 1 and both
/// basis projectors of every gridded basis.
pub fn effect_grid_qubit(resolution: usize) -> Vec<HermitianMatrix> {
    assert!(resolution >= 2, "effect grid needs at least two steps");
    let steps: Vec<f64> = (0..resolution)
        .map(|i| i as f64 / (resolution - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(resolution.pow(4));
    for it in 0..resolution {
        let theta = std::f64::consts::PI * steps[it];
        for ip in 0..resolution {
            // phi stops short of 2 pi to avoid duplicating the phi = 0 plane
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / resolution as f64;
            let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let u0 = [C64::new(ct, 0.0), C64::new(st * phi.cos(), st * phi.sin())];
            for &e1 in &steps {
                for &e2 in &steps {
                    let mut m = DMatrix::zeros(2, 2);
                    for a in 0..2 {
                        for b in 0..2 {
                            // e1 on |u0>, e2 on its orthogonal complement
                            let u1 = [-u0[1].conj(), u0[0].conj()];
                            m[(a, b)] = u0[a] * u0[b].conj() * e1 + u1[a] * u1[b].conj() * e2;
                        }
                    }
                    out.push(HermitianMatrix::from_symmetric_parts(m));
                }
            }
        }
    }
    out
}

/// Direction-grid oracle for the ratio-constrained success optimum on
/// real qubit instances: both success effects are restricted to rank one
/// along directions u(theta) from a uniform angle grid, and the two
/// amplitudes are then maximized exactly. On two-dimensional real
/// problems the optimum is approached as the grid refines, so this gives
/// an independent check of the projected-gradient solver.
pub fn p_max_qubit_oracle(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    q: f64,
    to_inf: f64,
    to_sup: crate::matcore::ExtReal,
    steps: usize,
) -> Result<f64> {
    use crate::matcore::ExtReal;
    if rho1.dim() != 2 || rho2.dim() != 2 {
        return Err(QlcError::invalid("the grid oracle handles qubits only"));
    }
    let real2 = |d: &DensityMatrix| -> Result<[[f64; 2]; 2]> {
        let m = d.as_hermitian().as_matrix();
        let worst = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(QlcError::invalid(
                "the grid oracle handles real instances only",
            ));
        }
        Ok([
            [m[(0, 0)].re, m[(0, 1)].re],
            [m[(1, 0)].re, m[(1, 1)].re],
        ])
    };
    let r1 = real2(rho1)?;
    let r2 = real2(rho2)?;
    let lin = |x: &[[f64; 2]; 2], s: f64, y: &[[f64; 2]; 2], t: f64| {
        [
            [s * x[0][0] + t * y[0][0], s * x[0][1] + t * y[0][1]],
            [s * x[1][0] + t * y[1][0], s * x[1][1] + t * y[1][1]],
        ]
    };
    let a_mat = match to_sup {
        ExtReal::Finite(mm) => lin(&r1, 1.0, &r2, -q * mm),
        ExtReal::Inf => lin(&r2, -1.0, &r2, 0.0),
    };
    let b_mat = if to_inf > 0.0 {
        lin(&r2, q * to_inf, &r1, -1.0)
    } else {
        lin(&r1, -1.0, &r1, 0.0)
    };
    let c_mat = lin(&r2, q, &r1, -1.0);
    let quad = |m: &[[f64; 2]; 2], cs: f64, sn: f64| {
        m[0][0] * cs * cs + 2.0 * m[0][1] * cs * sn + m[1][1] * sn * sn
    };
    let scale_c = c_mat
        .iter()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(1e-6);
    let htol = 1e-10 * scale_c;
    let eval = |ti: f64, tj: f64| -> f64 {
        let (cu, su) = (ti.cos(), ti.sin());
        let (cv, sv) = (tj.cos(), tj.sin());
        crate::opt::rank_one_amplitude_max(
            quad(&a_mat, cu, su),
            quad(&b_mat, cv, sv),
            quad(&c_mat, cu, su),
            quad(&c_mat, cv, sv),
            quad(&r1, cu, su),
            quad(&r1, cv, sv),
            cu * cv + su * sv,
            htol,
        )
        .0
    };
    let mut best = 0.0f64;
    let mut best_at = (0.0f64, 0.0f64);
    for i in 0..steps {
        let ti = std::f64::consts::PI * i as f64 / steps as f64;
        for j in 0..steps {
            let tj = std::f64::consts::PI * j as f64 / steps as f64;
            let v = eval(ti, tj);
            if v > best {
                best = v;
                best_at = (ti, tj);
            }
        }
    }
    // iterative zoom around the best cell: the optimal directions can sit
    // inside an angular feature much narrower than the global grid pitch
    let mut half = std::f64::consts::PI / steps as f64;
    let (mut cu_angle, mut cv_angle) = best_at;
    for _ in 0..4 {
        let n = 24i64;
        let mut local_best = best;
        let mut local_at = (cu_angle, cv_angle);
        for i in -n..=n {
            let ti = cu_angle + half * i as f64 / n as f64;
            for j in -n..=n {
                let tj = cv_angle + half * j as f64 / n as f64;
                let v = eval(ti, tj);
                if v > local_best {
                    local_best = v;
                    local_at = (ti, tj);
                }
            }
        }
        best = local_best;
        cu_angle = local_at.0;
        cv_angle = local_at.1;
        half /= 12.0;
    }
    Ok(best.min(1.0))
}
