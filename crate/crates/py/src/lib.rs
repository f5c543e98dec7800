//! Python bindings. Build with `--features extension-module` to produce an
//! importable `tnm` module.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tnm_core::mle::{self, FitOptions, FitStatus, KroneckerPrecision, VerifyOptions};
use tnm_core::{GitDimension, StabilityClass};

fn value_error(e: tnm_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A tensor normal model `(d_1, …, d_k)` with `m` samples.
#[pyclass(name = "Datum", module = "tnm", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PyDatum {
    inner: tnm_core::Datum,
}

#[pymethods]
impl PyDatum {
    #[new]
    fn new(dims: Vec<u64>, m: u64) -> PyResult<Self> {
        let inner = tnm_core::Datum::new(dims, m).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> Vec<u64> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn m(&self) -> u64 {
        self.inner.m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn normalize(&self) -> Self {
        Self {
            inner: self.inner.normalize(),
        }
    }

    /// Exact `R` as a Python int.
    fn big_r(&self) -> BigInt {
        tnm_core::big_r(&self.inner)
    }

    fn delta(&self) -> BigInt {
        tnm_core::delta(&self.inner)
    }

    fn g_max(&self) -> BigInt {
        tnm_core::g_max(&self.inner)
    }

    fn castle_step(&self) -> PyResult<Self> {
        let inner = tnm_core::castle_step(&self.inner).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Normalized data from this one down to its minimal representative.
    fn castling_trace(&self) -> Vec<Self> {
        tnm_core::reduce_to_minimal(&self.inner)
            .steps
            .into_iter()
            .map(|inner| Self { inner })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Datum({:?}, {})", self.inner.dims(), self.inner.m())
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

fn class_name(c: StabilityClass) -> &'static str {
    c.as_str()
}

#[pyfunction]
fn classify_closed_form(datum: &PyDatum) -> &'static str {
    class_name(tnm_core::classify_closed_form(&datum.inner))
}

#[pyfunction]
fn classify_recursive(datum: &PyDatum) -> &'static str {
    class_name(tnm_core::classify_recursive(&datum.inner))
}

#[pyfunction]
fn castling_equivalent(a: &PyDatum, b: &PyDatum) -> bool {
    tnm_core::castling_equivalent(&a.inner, &b.inner)
}

#[pyfunction]
fn z_quantity(values: Vec<u64>) -> PyResult<BigInt> {
    tnm_core::z_quantity(&values).map_err(value_error)
}

#[pyfunction]
fn mle_profile<'py>(py: Python<'py>, datum: &PyDatum) -> PyResult<Bound<'py, PyDict>> {
    let p = tnm_core::mle_profile(&datum.inner);
    let d = PyDict::new(py);
    d.set_item("bounded_as", p.bounded_as)?;
    d.set_item("exists_as", p.exists_as)?;
    d.set_item("unique_as", p.unique_as)?;
    d.set_item("always_unbounded", p.always_unbounded)?;
    Ok(d)
}

/// `{"mlt_b", "mlt_e", "mlt_u", "cor_bounds"}`; `cor_bounds` is a pair of
/// ints or `None`.
#[pyfunction]
fn thresholds<'py>(py: Python<'py>, dims: Vec<u64>) -> PyResult<Bound<'py, PyDict>> {
    let t = tnm_core::thresholds(&dims).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("mlt_b", t.mlt_b)?;
    d.set_item("mlt_e", t.mlt_e)?;
    d.set_item("mlt_u", t.mlt_u)?;
    d.set_item("cor_bounds", t.cor_bounds)?;
    Ok(d)
}

/// GIT quotient dimension, or `None` when the quotient is empty.
#[pyfunction]
fn git_dimension(datum: &PyDatum) -> Option<BigInt> {
    match tnm_core::git_dimension(&datum.inner) {
        GitDimension::Empty => None,
        GitDimension::Dim(d) => Some(d),
    }
}

/// The full classification report as a JSON string.
#[pyfunction]
fn explain_json(datum: &PyDatum) -> String {
    tnm_core::explain(&datum.inner).to_json()
}

/// `m` real samples of shape `dims`, flattened row-major.
#[pyclass(name = "SampleSet", module = "tnm", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySampleSet {
    inner: mle::SampleSet,
}

#[pymethods]
impl PySampleSet {
    #[new]
    fn new(dims: Vec<usize>, m: usize, data: Vec<f64>) -> PyResult<Self> {
        let inner = mle::SampleSet::new(dims, m, data).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = mle::SampleSet::from_json(text).map_err(value_error)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "SampleSet(dims={:?}, m={})",
            self.inner.dims(),
            self.inner.m()
        )
    }
}

#[pyfunction]
fn simulate(dims: Vec<usize>, m: usize, seed: u64) -> PyResult<PySampleSet> {
    let inner = mle::sample_standard(&dims, m, seed).map_err(value_error)?;
    Ok(PySampleSet { inner })
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(index: usize, rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(format!(
            "factor {index} is not square"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn status_name(s: FitStatus) -> &'static str {
    match s {
        FitStatus::Converged => "converged",
        FitStatus::Diverged => "diverged",
        FitStatus::MaxIterations => "max_iterations",
        FitStatus::DegenerateStatistic => "degenerate_statistic",
    }
}

/// Flip-flop fit from `init` (identity factors when omitted). Returns
/// `{"status", "loglik", "iterations", "factors"}`; `factors` is a list of
/// nested row lists, or `None` unless the fit converged or hit the
/// iteration limit.
#[pyfunction]
#[pyo3(signature = (samples, init=None, tol=1e-10, max_iter=10_000))]
fn fit<'py>(
    py: Python<'py>,
    samples: &PySampleSet,
    init: Option<Vec<Vec<Vec<f64>>>>,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let start = match init {
        None => KroneckerPrecision::identity(samples.inner.dims()),
        Some(factors) => {
            let mats = factors
                .iter()
                .enumerate()
                .map(|(i, f)| from_rows(i, f))
                .collect::<PyResult<Vec<_>>>()?;
            KroneckerPrecision::new(mats).map_err(value_error)?
        }
    };
    let opts = FitOptions {
        tol,
        max_iter,
        ..FitOptions::default()
    };
    let y = &samples.inner;
    let report = py
        .detach(|| mle::fit_mle(y, &start, &opts))
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("status", status_name(report.status))?;
    d.set_item("loglik", report.loglik)?;
    d.set_item("iterations", report.iterations)?;
    let factors = report
        .factors
        .map(|f| f.factors().iter().map(to_rows).collect::<Vec<_>>());
    d.set_item("factors", factors)?;
    Ok(d)
}

/// Simulates `trials` data sets and checks the predicted MLE behaviour.
/// Returns the verification report as a dict.
#[pyfunction]
#[pyo3(signature = (datum, trials=20, restarts=4, seed=0))]
fn verify<'py>(
    py: Python<'py>,
    datum: &PyDatum,
    trials: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = VerifyOptions {
        trials,
        restarts,
        seed,
        ..VerifyOptions::default()
    };
    let d = &datum.inner;
    let report = py
        .detach(|| mle::verify_datum(d, &opts))
        .map_err(value_error)?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["hard_clauses_agree"] = report.hard_clauses_agree().into();
    value["numerical_failure"] = report.numerical_failure().into();
    py.import("json")?
        .call_method1("loads", (value.to_string(),))
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDatum>()?;
    m.add_class::<PySampleSet>()?;
    m.add_function(wrap_pyfunction!(classify_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(classify_recursive, m)?)?;
    m.add_function(wrap_pyfunction!(castling_equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(z_quantity, m)?)?;
    m.add_function(wrap_pyfunction!(mle_profile, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(git_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(explain_json, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

#[pymodule]
fn tnm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
