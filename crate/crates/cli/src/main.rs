//! `qlc`: command surface over the pair-comparison library.
//!
//! States travel as JSON files, curves and samples as CSV, decisions as
//! JSON on stdout. Exit codes are part of the contract: 0 for success or a
//! holding verdict, 1 for a certified mathematical failure, 2 for input
//! errors, 3 for a marginal verdict that neither side can certify.

mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use qlc_core::athermality::{gibbs_convertible, ConversionReport, GibbsSpec};
use qlc_core::channels::tap_exists;
use qlc_core::divergence::{
    d_max, d_min, hilbert_alpha, hilbert_metric, q_epsilon, sup_alpha, trace_distance,
};
use qlc_core::lorenz::{lorenz_curve, relative_majorizes};
use qlc_core::matcore::{pencil_extremes, DensityMatrix, HermitianMatrix};
use qlc_core::probabilistic::{p_max, q_window};
use qlc_core::verify::{random_density, testing_region_sample};
use qlc_core::Verdict;
use report::Report;

#[derive(Parser)]
#[command(
    name = "qlc",
    version,
    about = "Relative Lorenz curves, Hilbert divergences and conversion tests for pairs of density matrices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the upper boundary of a pair's testing region as CSV
    Curve {
        /// First state file
        rho1: PathBuf,
        /// Second state file
        rho2: PathBuf,
        /// Number of threshold grid points (at least 2)
        #[arg(long, default_value_t = 512)]
        points: usize,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a divergence or distance between two states
    Div {
        rho1: PathBuf,
        rho2: PathBuf,
        /// One of: h_alpha, d_max, d_min, dh_eps, trace_distance, hilbert_metric
        #[arg(long)]
        metric: String,
        /// Order for h_alpha; "inf" accepted
        #[arg(long)]
        alpha: Option<f64>,
        /// Error tolerance for dh_eps, in [0, 1]
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Decide whether (rho1, rho2) relatively majorizes (sigma1, sigma2)
    Majorize {
        rho1: PathBuf,
        rho2: PathBuf,
        sigma1: PathBuf,
        sigma2: PathBuf,
        /// Number of probe thresholds
        #[arg(long, default_value_t = 2048)]
        points: usize,
    },
    /// Decide two-level thermal convertibility under a Gibbs-fixing channel
    Gibbs {
        from: PathBuf,
        to: PathBuf,
        /// Inverse temperature; "inf" for zero temperature
        #[arg(long)]
        beta: f64,
        /// Energy levels as a comma-separated list, one per dimension
        #[arg(long, value_delimiter = ',', required = true)]
        energies: Vec<f64>,
    },
    /// Decide whether a test-and-prepare channel maps one pair to another
    Tap {
        rho1: PathBuf,
        rho2: PathBuf,
        to1: PathBuf,
        to2: PathBuf,
    },
    /// Decide probabilistic convertibility; optionally evaluate the maximal
    /// success probability at a given ratio q
    Prob {
        rho1: PathBuf,
        rho2: PathBuf,
        to1: PathBuf,
        to2: PathBuf,
        /// Ratio Tr[R rho2] / Tr[R rho1] at which to maximize success
        #[arg(long)]
        q: Option<f64>,
    },
    /// Generate a seeded random density matrix
    StateGen {
        /// Hilbert space dimension
        #[arg(long)]
        dim: usize,
        /// Generator seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output state file path
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample points of the testing region of a pair as CSV
    RegionSample {
        rho1: PathBuf,
        rho2: PathBuf,
        /// Number of sampled effects
        #[arg(long)]
        n: usize,
        /// Generator seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn exit_for(v: Verdict) -> ExitCode {
    match v {
        Verdict::Holds => ExitCode::from(0),
        Verdict::Fails => ExitCode::from(1),
        Verdict::Marginal => ExitCode::from(3),
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Curve {
            rho1,
            rho2,
            points,
            out,
        } => {
            if points < 2 {
                bail!("--points must be at least 2, got {points}");
            }
            let r1 = io::read_state(&rho1)?;
            let r2 = io::read_state(&rho2)?;
            let curve = lorenz_curve(&r1, &r2, points)?;
            io::write_curve(&out, curve.points())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Div {
            rho1,
            rho2,
            metric,
            alpha,
            epsilon,
        } => {
            let r1 = io::read_state(&rho1)?;
            let r2 = io::read_state(&rho2)?;
            cmd_div(&r1, &r2, &metric, alpha, epsilon)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Majorize {
            rho1,
            rho2,
            sigma1,
            sigma2,
            points,
        } => {
            if points < 2 {
                bail!("--points must be at least 2, got {points}");
            }
            let r1 = io::read_state(&rho1)?;
            let r2 = io::read_state(&rho2)?;
            let s1 = io::read_state(&sigma1)?;
            let s2 = io::read_state(&sigma2)?;
            let rep = relative_majorizes(&r1, &r2, &s1, &s2, points)?;
            let from = pencil_extremes(&r1, &r2)?;
            let to = pencil_extremes(&s1, &s2)?;
            Report::new()
                .str("verdict", &rep.verdict.to_string())
                .num("min_gap", rep.min_gap)
                .num("witness_t", rep.witness_t)
                .num("m", from.inf)
                .ext("M", from.sup)
                .num("m_prime", to.inf)
                .ext("M_prime", to.sup)
                .print();
            Ok(exit_for(rep.verdict))
        }
        Cmd::Gibbs {
            from,
            to,
            beta,
            energies,
        } => {
            let f = io::read_state(&from)?;
            let t = io::read_state(&to)?;
            let rep = cmd_gibbs(&f, &t, beta, &energies)?;
            Report::new()
                .str("verdict", &rep.verdict.to_string())
                .num("min_gap", rep.min_gap)
                .num("m", rep.from.inf)
                .ext("M", rep.from.sup)
                .num("m_prime", rep.to.inf)
                .ext("M_prime", rep.to.sup)
                .print();
            Ok(exit_for(rep.verdict))
        }
        Cmd::Tap {
            rho1,
            rho2,
            to1,
            to2,
        } => {
            let r1 = io::read_state(&rho1)?;
            let r2 = io::read_state(&rho2)?;
            let t1 = io::read_state(&to1)?;
            let t2 = io::read_state(&to2)?;
            let rep = tap_exists(&r1, &r2, &t1, &t2)?;
            let from = pencil_extremes(&r1, &r2)?;
            Report::new()
                .str("verdict", &rep.verdict.to_string())
                .num("min_gap", rep.gap)
                .num("m", from.inf)
                .ext("M", from.sup)
                .num("m_prime", rep.inf)
                .ext("M_prime", rep.sup)
                .num("W", rep.witness)
                .print();
            Ok(exit_for(rep.verdict))
        }
        Cmd::Prob {
            rho1,
            rho2,
            to1,
            to2,
            q,
        } => {
            let r1 = io::read_state(&rho1)?;
            let r2 = io::read_state(&rho2)?;
            let t1 = io::read_state(&to1)?;
            let t2 = io::read_state(&to2)?;
            let window = q_window(&r1, &r2, &t1, &t2)?;
            let verdict = Verdict::from_gap(window.feasibility_gap());
            let from = pencil_extremes(&r1, &r2)?;
            let to = pencil_extremes(&t1, &t2)?;
            let mut rep = Report::new()
                .str("verdict", &verdict.to_string())
                .num("min_gap", window.feasibility_gap())
                .num("m", from.inf)
                .ext("M", from.sup)
                .num("m_prime", to.inf)
                .ext("M_prime", to.sup)
                .obj(
                    "q_window",
                    Report::new().num("lo", window.lo).ext("hi", window.hi),
                );
            if let Some(q) = q {
                rep = rep.num("p_max", p_max(&r1, &r2, &t1, &t2, q)?);
            }
            rep.print();
            Ok(exit_for(verdict))
        }
        Cmd::StateGen { dim, seed, out } => {
            if dim == 0 {
                bail!("--dim must be positive");
            }
            let state = random_density(dim, seed);
            io::write_state(&out, &state)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::RegionSample {
            rho1,
            rho2,
            n,
            seed,
            out,
        } => {
            let r1 = io::read_state(&rho1)?;
            let r2 = io::read_state(&rho2)?;
            let pts = testing_region_sample(&r1, &r2, n, seed)?;
            io::write_samples(out.as_deref(), &pts)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_div(
    r1: &DensityMatrix,
    r2: &DensityMatrix,
    metric: &str,
    alpha: Option<f64>,
    epsilon: Option<f64>,
) -> Result<()> {
    match metric {
        "h_alpha" => {
            let a = alpha.context("metric h_alpha needs --alpha")?;
            let value = hilbert_alpha(r1, r2, a)?;
            let mut rep = Report::new().num("alpha", a).ext("value_bits", value);
            if a.is_finite() && a > 1.0 {
                rep = rep.num("sup_alpha", sup_alpha(r1, r2, a)?);
            }
            rep.print();
        }
        "d_max" => {
            Report::new().ext("value_bits", d_max(r1, r2)?).print();
        }
        "d_min" => {
            Report::new().ext("value_bits", d_min(r1, r2)?).print();
        }
        "dh_eps" => {
            let e = epsilon.context("metric dh_eps needs --epsilon")?;
            let rep = q_epsilon(r1, r2, e)?;
            Report::new()
                .num("epsilon", e)
                .ext("value_bits", rep.dh_bits)
                .num("q_value", rep.q_value)
                .num("r_opt", rep.r_opt)
                .print();
        }
        "trace_distance" => {
            Report::new()
                .num("value_bits", trace_distance(r1, r2)?)
                .print();
        }
        "hilbert_metric" => {
            // the projective metric is natural-log valued; report it on the
            // same log2 scale as the entropic quantities
            let nats = hilbert_metric(r1, r2)?;
            let bits = nats.finite().map_or(qlc_core::matcore::ExtReal::Inf, |v| {
                qlc_core::matcore::ExtReal::Finite(v / std::f64::consts::LN_2)
            });
            Report::new().ext("value_bits", bits).print();
        }
        other => bail!(
            "unknown metric {other}; expected one of h_alpha, d_max, d_min, dh_eps, trace_distance, hilbert_metric"
        ),
    }
    Ok(())
}

/// Two-level thermal decision. Dimension-2 inputs feed the criterion
/// directly; larger systems must be confined to two energy levels, which
/// are detected from the populations and cut out as a 2x2 block together
/// with the matching energies. States leaking mass outside a single
/// two-level block are an input error, not a failing verdict.
fn cmd_gibbs(
    from: &DensityMatrix,
    to: &DensityMatrix,
    beta: f64,
    energies: &[f64],
) -> Result<ConversionReport> {
    let dim = from.dim();
    if to.dim() != dim {
        bail!("state dimensions differ: {} vs {}", dim, to.dim());
    }
    if energies.len() != dim {
        bail!(
            "--energies lists {} levels for dimension {dim}",
            energies.len()
        );
    }
    if dim == 2 {
        let spec = GibbsSpec::new(energies, beta)?;
        return Ok(gibbs_convertible(from, to, &spec)?);
    }
    let mut levels: Vec<usize> = (0..dim)
        .filter(|&i| from.entry(i, i).re > 1e-9 || to.entry(i, i).re > 1e-9)
        .collect();
    if levels.len() > 2 {
        bail!(
            "states occupy {} energy levels; the two-level criterion needs at most two",
            levels.len()
        );
    }
    if levels.is_empty() {
        bail!("states carry no population on any level");
    }
    if levels.len() == 1 {
        // all mass on one level: pad with any other so the block is 2x2
        let x = levels[0];
        levels.push(if x == 0 { 1 } else { 0 });
        levels.sort_unstable();
    }
    let (x, y) = (levels[0], levels[1]);
    let f2 = two_level_block(from, x, y).context("from state")?;
    let t2 = two_level_block(to, x, y).context("to state")?;
    let spec = GibbsSpec::new(&[energies[x], energies[y]], beta)?;
    Ok(gibbs_convertible(&f2, &t2, &spec)?)
}

fn two_level_block(state: &DensityMatrix, x: usize, y: usize) -> Result<DensityMatrix> {
    let pick = [x, y];
    let m = DMatrix::from_fn(2, 2, |i, j| state.entry(pick[i], pick[j]));
    let mass = m[(0, 0)].re + m[(1, 1)].re;
    if 1.0 - mass > 1e-9 {
        bail!("mass {:.3e} outside the two-level block ({x}, {y})", 1.0 - mass);
    }
    let h = HermitianMatrix::new(m.unscale(mass))?;
    Ok(DensityMatrix::new(h)?)
}
