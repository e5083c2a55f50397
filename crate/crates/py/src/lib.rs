//! Python surface: a `State` class plus the main pair-comparison
//! operations. Verdicts cross the boundary as strings, extended reals as
//! floats (infinities included), reports as dicts.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qlc_core::athermality::GibbsSpec;
use qlc_core::matcore::{DensityMatrix, HermitianMatrix};
use qlc_core::QlcError;

fn value_error(e: QlcError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Density matrix handle. Construction symmetrizes the input, requires the
/// trace to sit within 1e-6 of one, renormalizes, and validates positivity.
#[pyclass(frozen)]
struct State {
    inner: DensityMatrix,
}

impl State {
    fn wrap(inner: DensityMatrix) -> Self {
        State { inner }
    }
}

#[pymethods]
impl State {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let dim = matrix.len();
        if dim == 0 {
            return Err(PyValueError::new_err("matrix is empty"));
        }
        if matrix.iter().any(|row| row.len() != dim) {
            return Err(PyValueError::new_err("matrix rows must all have the same length"));
        }
        let raw = nalgebra::DMatrix::from_fn(dim, dim, |i, j| matrix[i][j]);
        let sym = (&raw + raw.adjoint()).scale(0.5);
        let trace: f64 = sym.diagonal().iter().map(|z| z.re).sum();
        if (trace - 1.0).abs() > 1e-6 {
            return Err(PyValueError::new_err(format!(
                "matrix has trace {trace}, more than 1e-6 away from one"
            )));
        }
        let h = HermitianMatrix::new(sym.unscale(trace)).map_err(value_error)?;
        Ok(State::wrap(DensityMatrix::new(h).map_err(value_error)?))
    }

    /// Diagonal state from a probability vector.
    #[staticmethod]
    fn from_probs(probs: Vec<f64>) -> PyResult<Self> {
        Ok(State::wrap(
            DensityMatrix::from_probs(&probs).map_err(value_error)?,
        ))
    }

    /// Seeded random full-rank state; identical across platforms and runs.
    #[staticmethod]
    fn random(dim: usize, seed: u64) -> PyResult<Self> {
        if dim == 0 {
            return Err(PyValueError::new_err("dimension must be positive"));
        }
        Ok(State::wrap(qlc_core::verify::random_density(dim, seed)))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Entries as a nested list of complex numbers.
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let d = self.inner.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.inner.entry(i, j)).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("State(dim={})", self.inner.dim())
    }
}

/// Points (t, x, y) of the upper testing-region boundary, sorted by x.
#[pyfunction]
#[pyo3(signature = (rho1, rho2, points = 512))]
fn lorenz_curve(
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    points: usize,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let curve = qlc_core::lorenz::lorenz_curve(&rho1.inner, &rho2.inner, points)
        .map_err(value_error)?;
    let mut rows: Vec<(f64, f64, f64)> =
        curve.points().iter().map(|p| (p.t, p.x, p.y)).collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(rows)
}

#[pyfunction]
#[pyo3(signature = (rho1, rho2, sigma1, sigma2, points = 2048))]
fn relative_majorizes<'py>(
    py: Python<'py>,
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    sigma1: PyRef<'_, State>,
    sigma2: PyRef<'_, State>,
    points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = qlc_core::lorenz::relative_majorizes(
        &rho1.inner,
        &rho2.inner,
        &sigma1.inner,
        &sigma2.inner,
        points,
    )
    .map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("verdict", rep.verdict.to_string())?;
    out.set_item("min_gap", rep.min_gap)?;
    out.set_item("witness_t", rep.witness_t)?;
    Ok(out)
}

/// H_alpha(rho || sigma) in bits; alpha in [1, inf], float("inf") accepted.
#[pyfunction]
fn hilbert_alpha(rho: PyRef<'_, State>, sigma: PyRef<'_, State>, alpha: f64) -> PyResult<f64> {
    Ok(qlc_core::divergence::hilbert_alpha(&rho.inner, &sigma.inner, alpha)
        .map_err(value_error)?
        .as_f64())
}

#[pyfunction]
fn d_max(rho: PyRef<'_, State>, sigma: PyRef<'_, State>) -> PyResult<f64> {
    Ok(qlc_core::divergence::d_max(&rho.inner, &sigma.inner)
        .map_err(value_error)?
        .as_f64())
}

#[pyfunction]
fn d_min(rho: PyRef<'_, State>, sigma: PyRef<'_, State>) -> PyResult<f64> {
    Ok(qlc_core::divergence::d_min(&rho.inner, &sigma.inner)
        .map_err(value_error)?
        .as_f64())
}

#[pyfunction]
fn trace_distance(rho: PyRef<'_, State>, sigma: PyRef<'_, State>) -> PyResult<f64> {
    qlc_core::divergence::trace_distance(&rho.inner, &sigma.inner).map_err(value_error)
}

/// Projective metric ln[sup(rho/sigma) sup(sigma/rho)], in natural units.
#[pyfunction]
fn hilbert_metric(rho: PyRef<'_, State>, sigma: PyRef<'_, State>) -> PyResult<f64> {
    Ok(qlc_core::divergence::hilbert_metric(&rho.inner, &sigma.inner)
        .map_err(value_error)?
        .as_f64())
}

#[pyfunction]
fn q_epsilon<'py>(
    py: Python<'py>,
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    eps: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let rep =
        qlc_core::divergence::q_epsilon(&rho1.inner, &rho2.inner, eps).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("q_value", rep.q_value)?;
    out.set_item("r_opt", rep.r_opt)?;
    out.set_item("dh_bits", rep.dh_bits.as_f64())?;
    Ok(out)
}

/// Two-level thermal convertibility; beta may be float("inf").
#[pyfunction]
fn gibbs_convertible<'py>(
    py: Python<'py>,
    from_state: PyRef<'_, State>,
    to_state: PyRef<'_, State>,
    energies: Vec<f64>,
    beta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = GibbsSpec::new(&energies, beta).map_err(value_error)?;
    let rep = qlc_core::athermality::gibbs_convertible(&from_state.inner, &to_state.inner, &spec)
        .map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("verdict", rep.verdict.to_string())?;
    out.set_item("min_gap", rep.min_gap)?;
    out.set_item("m", rep.from.inf)?;
    out.set_item("M", rep.from.sup.as_f64())?;
    out.set_item("m_prime", rep.to.inf)?;
    out.set_item("M_prime", rep.to.sup.as_f64())?;
    Ok(out)
}

#[pyfunction]
fn tap_exists<'py>(
    py: Python<'py>,
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    to1: PyRef<'_, State>,
    to2: PyRef<'_, State>,
) -> PyResult<Bound<'py, PyDict>> {
    let rep = qlc_core::channels::tap_exists(&rho1.inner, &rho2.inner, &to1.inner, &to2.inner)
        .map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("verdict", rep.verdict.to_string())?;
    out.set_item("min_gap", rep.gap)?;
    out.set_item("W", rep.witness)?;
    out.set_item("m_prime", rep.inf)?;
    out.set_item("M_prime", rep.sup.as_f64())?;
    Ok(out)
}

/// Admissible ratio window (lo, hi) for probabilistic conversion; empty
/// when lo > hi.
#[pyfunction]
fn q_window(
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    to1: PyRef<'_, State>,
    to2: PyRef<'_, State>,
) -> PyResult<(f64, f64)> {
    let w = qlc_core::probabilistic::q_window(&rho1.inner, &rho2.inner, &to1.inner, &to2.inner)
        .map_err(value_error)?;
    Ok((w.lo, w.hi.as_f64()))
}

#[pyfunction]
fn prob_feasible(
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    to1: PyRef<'_, State>,
    to2: PyRef<'_, State>,
) -> PyResult<String> {
    Ok(
        qlc_core::probabilistic::prob_feasible(&rho1.inner, &rho2.inner, &to1.inner, &to2.inner)
            .map_err(value_error)?
            .to_string(),
    )
}

/// Maximal heralded success probability at ratio q; zero outside the window.
#[pyfunction]
fn p_max(
    rho1: PyRef<'_, State>,
    rho2: PyRef<'_, State>,
    to1: PyRef<'_, State>,
    to2: PyRef<'_, State>,
    q: f64,
) -> PyResult<f64> {
    qlc_core::probabilistic::p_max(&rho1.inner, &rho2.inner, &to1.inner, &to2.inner, q)
        .map_err(value_error)
}

#[pymodule]
fn qlc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<State>()?;
    m.add_function(wrap_pyfunction!(lorenz_curve, m)?)?;
    m.add_function(wrap_pyfunction!(relative_majorizes, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(d_max, m)?)?;
    m.add_function(wrap_pyfunction!(d_min, m)?)?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_metric, m)?)?;
    m.add_function(wrap_pyfunction!(q_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_convertible, m)?)?;
    m.add_function(wrap_pyfunction!(tap_exists, m)?)?;
    m.add_function(wrap_pyfunction!(q_window, m)?)?;
    m.add_function(wrap_pyfunction!(prob_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(p_max, m)?)?;
    Ok(())
}
