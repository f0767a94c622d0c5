//! Python module `kitaev_dimer`.
//!
//! Structured results (phase rows, coherence series, `D_μ` studies,
//! validation reports) cross the boundary as plain dicts and lists.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use kdimer_core::coherence::{coherence_series, ConvergenceGate, DmuConfig, Engine, G2Kind};
use kdimer_core::core_matrix::{self, ModeSign, PhaseRow};
use kdimer_core::fock::{build_dimer_hamiltonian, Mode, Truncation};
use kdimer_core::grid::{MuGrid, TimeGrid};
use kdimer_core::nambu::{self, BareState, LinearLadder};
use kdimer_core::validate::{run as run_validation, Level};
use kdimer_core::Error;

create_exception!(kitaev_dimer, TruncationError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        Error::Truncation { .. } | Error::CutoffInadequate(_) => TruncationError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn sign(rho: i32) -> PyResult<ModeSign> {
    match rho {
        1 => Ok(ModeSign::Plus),
        -1 => Ok(ModeSign::Minus),
        _ => Err(PyValueError::new_err(format!("rho must be +1 or -1, got {rho}"))),
    }
}

fn truncation(n_max: usize, margin: Option<usize>) -> PyResult<Truncation> {
    match margin {
        Some(m) => Truncation::new(n_max, m),
        None => Truncation::with_n_max(n_max),
    }
    .map_err(py_err)
}

/// Region and normal-mode data at `mu`.
#[pyfunction]
fn phase(py: Python<'_>, mu: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &PhaseRow::at(mu).map_err(py_err)?)
}

/// Exceptional points as `(mu, rho)` pairs.
#[pyfunction]
fn ep_locus() -> Vec<(f64, i32)> {
    core_matrix::ep_locus()
        .into_iter()
        .map(|p| (p.mu, p.rho.value() as i32))
        .collect()
}

/// Core-matrix eigenvalues as `(re, im)` pairs and the eigenvector coalescence.
#[pyfunction]
fn core_spectrum(mu: f64, rho: i32) -> PyResult<(Vec<(f64, f64)>, f64)> {
    let s = core_matrix::core_spectrum(mu, sign(rho)?).map_err(py_err)?;
    Ok((s.lambda.iter().map(|z| (z.re, z.im)).collect(), s.coalescence))
}

/// Lowest `count` eigenvalues of the truncated Hamiltonian.
#[pyfunction]
#[pyo3(signature = (mu, n_max, margin = None, count = None))]
fn eigenvalues(py: Python<'_>, mu: f64, n_max: usize, margin: Option<usize>, count: Option<usize>) -> PyResult<Vec<f64>> {
    let tr = truncation(n_max, margin)?;
    let mut e = py
        .detach(|| build_dimer_hamiltonian(mu, &tr).and_then(|h| kdimer_core::diagonalize(&h)))
        .map_err(py_err)?
        .eigenvalues();
    if let Some(c) = count {
        e.truncate(c);
    }
    Ok(e)
}

/// Exact Heisenberg-picture engine, free of any occupation cutoff.
#[pyclass(frozen)]
struct NambuEngine {
    inner: nambu::NambuEngine,
}

#[pymethods]
impl NambuEngine {
    /// `state=None` is `(|1,0> + |0,1>)/√2`; `(m, n)` is a Fock state.
    #[new]
    #[pyo3(signature = (mu, state = None))]
    fn new(mu: f64, state: Option<(usize, usize)>) -> PyResult<Self> {
        let state = match state {
            None => BareState::SymmetricSingle,
            Some((m, n)) => BareState::Fock(m, n),
        };
        Ok(NambuEngine { inner: nambu::NambuEngine::new(mu, state).map_err(py_err)? })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    fn g2(&self, t1: f64, t2: f64) -> PyResult<f64> {
        self.inner.g2(t1, t2).map_err(py_err)
    }

    /// `<n_a(t)>` or `<n_b(t)>`.
    fn occupation(&self, mode: &str, t: f64) -> PyResult<f64> {
        let mode = match mode {
            "a" => Mode::A,
            "b" => Mode::B,
            _ => return Err(PyValueError::new_err(format!("mode must be 'a' or 'b', got '{mode}'"))),
        };
        self.inner.occupation(&LinearLadder::lowering(mode), t).map_err(py_err)
    }
}

fn engine(name: &str, n_max: usize, gate: bool) -> PyResult<Engine> {
    match name {
        "nambu" => Ok(Engine::Nambu),
        "fock" => Ok(Engine::Fock {
            truncation: truncation(n_max, None)?,
            gate: gate.then(ConvergenceGate::default),
        }),
        _ => Err(PyValueError::new_err(format!("engine must be 'nambu' or 'fock', got '{name}'"))),
    }
}

/// `g²` along one time axis; withheld samples come back as `None`.
#[pyfunction]
#[pyo3(signature = (kind, mu, t_max, dt = 0.01, engine = "nambu", n_max = 40, gate = true))]
fn g2_series(py: Python<'_>, kind: &str, mu: f64, t_max: f64, dt: f64, engine: &str, n_max: usize, gate: bool) -> PyResult<Py<PyAny>> {
    let kind: G2Kind = kind.parse().map_err(py_err)?;
    let engine = self::engine(engine, n_max, gate)?;
    let grid = TimeGrid::new(t_max, dt).map_err(py_err)?;
    let series = py.detach(|| coherence_series(kind, mu, &grid, &engine)).map_err(py_err)?;
    to_py(py, &series)
}

/// `D_μ` curves on cell centers of `[mu_lo, mu_hi]` and the extrapolation fit.
#[pyfunction]
#[pyo3(signature = (kind = "0t", mu_lo = 0.5, mu_hi = 3.5, step = 0.01, windows = vec![2.0, 4.0, 6.0, 8.0], dt = 0.01, workers = 1))]
#[allow(clippy::too_many_arguments)]
fn dmu_study(
    py: Python<'_>,
    kind: &str,
    mu_lo: f64,
    mu_hi: f64,
    step: f64,
    windows: Vec<f64>,
    dt: f64,
    workers: usize,
) -> PyResult<Py<PyAny>> {
    let config = DmuConfig {
        kind: kind.parse().map_err(py_err)?,
        mu_grid: MuGrid::cell_centers(mu_lo, mu_hi, step).map_err(py_err)?,
        windows,
        dt,
        engine: Engine::Nambu,
        workers,
    };
    let study = py.detach(|| kdimer_core::dmu_study(&config)).map_err(py_err)?;
    to_py(py, &study)
}

/// Self-check report; `level` is `"quick"` or `"full"`.
#[pyfunction]
#[pyo3(signature = (level = "quick"))]
fn validate(py: Python<'_>, level: &str) -> PyResult<Py<PyAny>> {
    let level: Level = level.parse().map_err(py_err)?;
    let report = py.detach(|| run_validation(level, false));
    to_py(py, &report)
}

#[pymodule(name = "kitaev_dimer")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TruncationError", m.py().get_type::<TruncationError>())?;
    m.add_class::<NambuEngine>()?;
    m.add_function(wrap_pyfunction!(phase, m)?)?;
    m.add_function(wrap_pyfunction!(ep_locus, m)?)?;
    m.add_function(wrap_pyfunction!(core_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(g2_series, m)?)?;
    m.add_function(wrap_pyfunction!(dmu_study, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
