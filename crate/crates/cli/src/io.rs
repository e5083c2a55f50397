//! File formats: JSON state files, CSV curve and sample files.
//!
//! States travel as `{dim, matrix}` with row-major `{re, im}` entries.
//! Parsing symmetrizes the matrix and renormalizes the trace, but a trace
//! farther than 1e-6 from one is rejected rather than silently rescaled;
//! positivity is enforced by the library constructor.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use qlc_core::lorenz::CurvePoint;
use qlc_core::matcore::{DensityMatrix, HermitianMatrix};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct EntryJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    dim: usize,
    matrix: Vec<Vec<EntryJson>>,
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: StateJson = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    let dim = parsed.dim;
    if dim == 0 {
        bail!("{}: field \"dim\" must be positive", path.display());
    }
    if parsed.matrix.len() != dim {
        bail!(
            "{}: field \"matrix\" has {} rows, expected {dim}",
            path.display(),
            parsed.matrix.len()
        );
    }
    for (i, row) in parsed.matrix.iter().enumerate() {
        if row.len() != dim {
            bail!(
                "{}: field \"matrix\" row {i} has {} entries, expected {dim}",
                path.display(),
                row.len()
            );
        }
    }
    let raw = DMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(parsed.matrix[i][j].re, parsed.matrix[i][j].im)
    });
    // hand-edited files may carry mild asymmetry; repair it rather than
    // reject, the Hermitian part is what the numbers mean
    let sym = (&raw + raw.adjoint()).scale(0.5);
    let trace = sym.diagonal().iter().map(|z| z.re).sum::<f64>();
    if (trace - 1.0).abs() > 1e-6 {
        bail!(
            "{}: field \"matrix\" has trace {trace}, more than 1e-6 away from one",
            path.display()
        );
    }
    let normalized = sym.unscale(trace);
    let h = HermitianMatrix::new(normalized)
        .with_context(|| format!("validating {}", path.display()))?;
    DensityMatrix::new(h).with_context(|| format!("validating {}", path.display()))
}

pub fn write_state(path: &Path, state: &DensityMatrix) -> Result<()> {
    let dim = state.dim();
    let matrix = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let z = state.entry(i, j);
                    EntryJson { re: z.re, im: z.im }
                })
                .collect()
        })
        .collect();
    let text = serde_json::to_string_pretty(&StateJson { dim, matrix })?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Rows come out sorted by x; an unbounded threshold prints as "inf",
/// which is also how it parses back.
pub fn write_curve(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut rows: Vec<&CurvePoint> = points.iter().collect();
    rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut text = String::from("t,x,y\n");
    for p in rows {
        text.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.t, p.x, p.y));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_samples(out: Option<&Path>, points: &[(f64, f64)]) -> Result<()> {
    let mut text = String::from("x,y\n");
    for (x, y) in points {
        text.push_str(&format!("{x:.16e},{y:.16e}\n"));
    }
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
