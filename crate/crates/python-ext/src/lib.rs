//! Python module `pybathtraj`: baths, Kraus sets, metrics, master equations and scenarios.
//!
//! Matrices cross the boundary as lists of rows of Python `complex`.

use bathtraj::avgdyn::{integrate_me, steady_state, LindbladModel, SteadyStateOptions};
use bathtraj::bathkit::{BathSpec, GhzBath, Sign, TwoQubitBath};
use bathtraj::densecore::{ComplexMatrix, DimLayout};
use bathtraj::krausforge::{kraus_set, Basis, KrausSet, SystemSpec};
use bathtraj::quantmetrics;
use bathtraj::scenario;
use bathtraj::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<Complex64>>;
/// `(outcomes, probability, class, state, fidelity)`
type TableRow = (Vec<String>, f64, String, String, f64);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Input(_) | Error::Layout(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: Rows) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(&rows).map_err(py_err)
}

fn vector(amps: Vec<Complex64>) -> ComplexMatrix {
    ComplexMatrix::ket(&amps)
}

fn system_for(bath: &BathSpec, gamma_dt: f64) -> PyResult<SystemSpec> {
    SystemSpec::atoms(bath.n_qubits(), gamma_dt).map_err(py_err)
}

/// Bath preparation for one time step.
#[pyclass(name = "Bath", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBath {
    inner: BathSpec,
}

#[pymethods]
impl PyBath {
    /// Two-qubit bath from amplitudes on `ee, gg, eg, ge`.
    #[staticmethod]
    #[pyo3(signature = (b_ee, b_gg, b_eg = Complex64::new(0.0, 0.0), b_ge = Complex64::new(0.0, 0.0)))]
    fn two_qubit(b_ee: Complex64, b_gg: Complex64, b_eg: Complex64, b_ge: Complex64) -> PyResult<Self> {
        let b = TwoQubitBath::new(b_ee, b_gg, b_eg, b_ge).map_err(py_err)?;
        Ok(Self { inner: BathSpec::TwoQubit(b) })
    }

    /// Near-Bell bath, `sign` is `"+"` or `"-"`.
    #[staticmethod]
    fn near_bell(sign: &str, epsilon: f64) -> PyResult<Self> {
        let s = match sign {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            other => return Err(PyValueError::new_err(format!("sign must be '+' or '-', got {other:?}"))),
        };
        let b = TwoQubitBath::near_bell(s, epsilon).map_err(py_err)?;
        Ok(Self { inner: BathSpec::TwoQubit(b) })
    }

    #[staticmethod]
    fn ghz(b_eee: Complex64, b_ggg: Complex64) -> PyResult<Self> {
        let b = GhzBath::new(b_eee, b_ggg).map_err(py_err)?;
        Ok(Self { inner: BathSpec::Ghz(b) })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn density_matrix(&self) -> Rows {
        self.inner.density_matrix().to_rows()
    }

    fn __repr__(&self) -> String {
        format!("Bath({:?})", self.inner)
    }
}

/// Measurement-conditioned Kraus operators for one bath and basis.
#[pyclass(name = "KrausSet", frozen)]
struct PyKrausSet {
    inner: KrausSet,
}

#[pymethods]
impl PyKrausSet {
    /// `basis` is one of `local-zz`, `bell`, `local-xz`, `local-zzz`.
    #[new]
    #[pyo3(signature = (bath, basis, gamma_dt = 0.01))]
    fn new(bath: &PyBath, basis: &str, gamma_dt: f64) -> PyResult<Self> {
        let basis = Basis::from_descriptor(basis).ok_or_else(|| PyValueError::new_err(format!("unknown basis {basis:?}")))?;
        let sys = system_for(&bath.inner, gamma_dt)?;
        Ok(Self { inner: kraus_set(&sys, &bath.inner, basis).map_err(py_err)? })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels()
    }

    fn probabilities(&self, rho: Rows) -> PyResult<Vec<f64>> {
        Ok(self.inner.probabilities(&matrix(rho)?))
    }

    /// Normalized conditional state after `label`.
    fn update(&self, label: &str, rho: Rows) -> PyResult<Rows> {
        let i = self.index(label)?;
        let out = self.inner.apply_positive(i, &matrix(rho)?);
        let p = out.trace().re;
        if p <= 0.0 {
            return Err(PyValueError::new_err(format!("outcome {label} has zero probability")));
        }
        Ok(out.scale_real(1.0 / p).to_rows())
    }

    /// Outcome-averaged map applied to `rho`.
    fn average_map(&self, rho: Rows) -> PyResult<Rows> {
        Ok(self.inner.average_map(&matrix(rho)?).to_rows())
    }

    fn completeness_residual(&self) -> f64 {
        self.inner.completeness_residual()
    }

    fn __len__(&self) -> usize {
        self.inner.n_outcomes()
    }
}

impl PyKrausSet {
    fn index(&self, label: &str) -> PyResult<usize> {
        self.inner.index_of(label).ok_or_else(|| PyValueError::new_err(format!("unknown outcome {label:?}")))
    }
}

/// `⟨ψ|ρ|ψ⟩`
#[pyfunction]
fn fidelity(rho: Rows, psi: Vec<Complex64>) -> PyResult<f64> {
    quantmetrics::fidelity(&matrix(rho)?, &vector(psi)).map_err(py_err)
}

/// Log negativity of `rho` with subsystem `cut` transposed.
#[pyfunction]
#[pyo3(signature = (rho, dims = vec![2, 2], cut = 1))]
fn log_negativity(rho: Rows, dims: Vec<usize>, cut: usize) -> PyResult<f64> {
    let layout = DimLayout::new(dims).map_err(py_err)?;
    quantmetrics::log_negativity(&matrix(rho)?, &layout, cut).map_err(py_err)
}

#[pyfunction]
fn purity(rho: Rows) -> PyResult<f64> {
    Ok(quantmetrics::purity(&matrix(rho)?))
}

/// Master-equation states at every step `0..=n_steps`.
#[pyfunction]
#[pyo3(signature = (bath, rho0, n_steps, gamma_dt = 0.01, substeps = 1))]
fn master_equation(bath: &PyBath, rho0: Rows, n_steps: usize, gamma_dt: f64, substeps: usize) -> PyResult<Vec<Rows>> {
    let model = LindbladModel::from_bath(&bath.inner, &system_for(&bath.inner, gamma_dt)?).map_err(py_err)?;
    let states = integrate_me(&matrix(rho0)?, &model, n_steps, substeps).map_err(py_err)?;
    Ok(states.iter().map(ComplexMatrix::to_rows).collect())
}

#[pyfunction]
#[pyo3(signature = (bath, rho0, tol = 1e-12))]
fn master_equation_steady_state(bath: &PyBath, rho0: Rows, tol: f64) -> PyResult<Rows> {
    let model = LindbladModel::from_bath(&bath.inner, &system_for(&bath.inner, 0.01)?).map_err(py_err)?;
    let opts = SteadyStateOptions { tol, ..Default::default() };
    Ok(steady_state(&model, &matrix(rho0)?, opts).map_err(py_err)?.to_rows())
}

/// Validates a JSON config; returns `(canonical_json, hash)`.
#[pyfunction]
fn validate_config(text: &str) -> PyResult<(String, String)> {
    let cfg = scenario::parse_config(text.as_bytes()).map_err(py_err)?;
    Ok((cfg.canonical_json(), cfg.hash()))
}

/// Runs a JSON scenario in memory; returns the ensemble summary.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = scenario::parse_config(text.as_bytes()).map_err(py_err)?;
    let report = py.detach(|| scenario::run_scenario(&cfg)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("config_hash", &report.config_hash)?;
    out.set_item("engine", &report.engine)?;
    out.set_item("n_traj", report.n_traj)?;
    out.set_item("steps", report.summary.iter().map(|r| r.step).collect::<Vec<_>>())?;
    for (j, label) in quantmetrics::METRIC_LABELS.iter().enumerate() {
        out.set_item(format!("mean_{label}"), report.summary.iter().map(|r| r.mean[j]).collect::<Vec<_>>())?;
        out.set_item(format!("se_{label}"), report.summary.iter().map(|r| r.se[j]).collect::<Vec<_>>())?;
    }
    out.set_item("me_max_dev", report.summary.iter().map(|r| r.me_max_dev).collect::<Vec<_>>())?;
    out.set_item("min_eigenvalue", report.min_eigenvalue)?;
    out.set_item("max_probability_defect", report.max_probability_defect)?;
    Ok(out)
}

/// Exhaustive outcome table, one row per outcome sequence.
#[pyfunction]
fn enumerate_outcomes(text: &str, state: &str) -> PyResult<Vec<TableRow>> {
    let cfg = scenario::parse_config(text.as_bytes()).map_err(py_err)?;
    let rows = scenario::enumerate_outcomes(&cfg, state).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| (r.outcomes, r.probability, r.class.symbol().to_string(), r.state, r.fidelity)).collect())
}

#[pymodule]
fn pybathtraj(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBath>()?;
    m.add_class::<PyKrausSet>()?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(log_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(master_equation, m)?)?;
    m.add_function(wrap_pyfunction!(master_equation_steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_outcomes, m)?)?;
    Ok(())
}
