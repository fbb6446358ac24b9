//! Python bindings: matrices, sampling, U-statistics, variance estimation
//! and the studentized reports, as thin wrappers over the core crate.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use netustat::fast::u_fast;
use netustat::inference::{compare_networks, statistic_report, StatisticId};
use netustat::kernels::resolve_kernel;
use netustat::matrix::{load_matrix, save_matrix, BipartiteMatrix, MatrixFormat};
use netustat::models::ModelJson;
use netustat::ustat::u_naive;
use netustat::varest::{
    algorithm_a_variance, variance_estimate, AlgorithmAOptions, RhoPolicy, VarMethod,
};

fn to_py_err(e: netustat::Error) -> PyErr {
    match &e {
        netustat::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    match v {
        serde_json::Value::Null => Ok(py.None()),
        serde_json::Value::Bool(b) => b.into_py_any(py),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        serde_json::Value::String(s) => s.as_str().into_py_any(py),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn report_to_py(py: Python<'_>, report: &netustat::inference::EstimateReport) -> PyResult<Py<PyAny>> {
    let value = serde_json::to_value(report)
        .map_err(|e| PyValueError::new_err(format!("cannot serialize report: {e}")))?;
    json_to_py(py, &value)
}

fn rho_policy(rho: Option<f64>) -> RhoPolicy {
    match rho {
        Some(r) => RhoPolicy::Fixed(r),
        None => RhoPolicy::Empirical,
    }
}

/// Dense bipartite adjacency matrix.
#[pyclass(name = "Matrix", from_py_object)]
#[derive(Clone)]
struct PyMatrix {
    inner: BipartiteMatrix,
}

#[pymethods]
impl PyMatrix {
    /// Build from a list of equal-length rows.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = rows.len();
        let n = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("rows have unequal lengths"));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(PyMatrix {
            inner: BipartiteMatrix::new(m, n, values).map_err(to_py_err)?,
        })
    }

    /// Load from a CSV/TSV file (format detected from the extension).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let p = std::path::Path::new(path);
        Ok(PyMatrix {
            inner: load_matrix(p, MatrixFormat::from_path(p)).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let p = std::path::Path::new(path);
        save_matrix(&self.inner, p, MatrixFormat::from_path(p)).map_err(to_py_err)
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn is_binary(&self) -> bool {
        self.inner.is_binary()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.m() || j >= self.inner.n() {
            return Err(PyValueError::new_err(format!(
                "index ({i}, {j}) out of bounds for a {}x{} matrix",
                self.inner.m(),
                self.inner.n()
            )));
        }
        Ok(self.inner.get(i, j))
    }

    fn to_lists(&self) -> Vec<Vec<f64>> {
        (0..self.inner.m())
            .map(|i| self.inner.row(i).to_vec())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Matrix(m={}, n={}, binary={})",
            self.inner.m(),
            self.inner.n(),
            self.inner.is_binary()
        )
    }
}

/// Draw a network from a model JSON document.
#[pyfunction]
#[pyo3(signature = (model_json, m, n, seed = 42))]
fn sample(model_json: &str, m: usize, n: usize, seed: u64) -> PyResult<PyMatrix> {
    let model = ModelJson::from_json(model_json)
        .and_then(|j| j.build())
        .map_err(to_py_err)?;
    let s = netustat::models::sample(&model, m, n, seed).map_err(to_py_err)?;
    Ok(PyMatrix { inner: s.matrix })
}

/// U-statistic of a kernel (built-in name or whole-matrix fast path).
#[pyfunction]
#[pyo3(signature = (matrix, kernel, fast = false))]
fn ustat(matrix: &PyMatrix, kernel: &str, fast: bool) -> PyResult<f64> {
    if fast {
        return u_fast(&matrix.inner, kernel).map_err(to_py_err);
    }
    let h = resolve_kernel(kernel).map_err(to_py_err)?;
    Ok(u_naive(&matrix.inner, &h).map_err(to_py_err)?.value)
}

/// Asymptotic variance estimate; method is "direct", "loo" or "algo_a".
#[pyfunction]
#[pyo3(signature = (matrix, kernel, method = "direct", rho = None, seed = 42))]
fn variance(
    py: Python<'_>,
    matrix: &PyMatrix,
    kernel: &str,
    method: &str,
    rho: Option<f64>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let h = resolve_kernel(kernel).map_err(to_py_err)?;
    let policy = rho_policy(rho);
    let est = match method {
        "direct" => variance_estimate(&matrix.inner, &h, policy, VarMethod::Direct),
        "loo" => variance_estimate(&matrix.inner, &h, policy, VarMethod::LeaveOneOut),
        "algo_a" => algorithm_a_variance(
            &matrix.inner,
            &h,
            policy,
            AlgorithmAOptions {
                budget: 1_000_000,
                seed,
            },
        ),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method {other:?}; expected direct, loo or algo_a"
            )))
        }
    }
    .map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("kernel", h.id())?;
    dict.set_item("v10", est.v10)?;
    dict.set_item("v01", est.v01)?;
    dict.set_item("V", est.v)?;
    dict.set_item("rho", est.rho)?;
    dict.set_item("method", est.method.as_str())?;
    dict.set_item("degenerate", est.degenerate)?;
    dict.into_py_any(py)
}

/// Estimate a named statistic (f2, g2, d, motif6, motif14) with CI and
/// optional studentized test against `null`.
#[pyfunction]
#[pyo3(signature = (matrix, stat, null = None, alpha = 0.05, rho = None))]
fn estimate(
    py: Python<'_>,
    matrix: &PyMatrix,
    stat: &str,
    null: Option<f64>,
    alpha: f64,
    rho: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let stat = StatisticId::parse(stat).map_err(to_py_err)?;
    let report =
        statistic_report(&matrix.inner, stat, rho_policy(rho), alpha, null).map_err(to_py_err)?;
    report_to_py(py, &report)
}

/// Two-network comparison test.
#[pyfunction]
#[pyo3(signature = (matrix_a, matrix_b, stat, alpha = 0.05, rho = None))]
fn compare(
    py: Python<'_>,
    matrix_a: &PyMatrix,
    matrix_b: &PyMatrix,
    stat: &str,
    alpha: f64,
    rho: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let stat = StatisticId::parse(stat).map_err(to_py_err)?;
    let report = compare_networks(
        &matrix_a.inner,
        &matrix_b.inner,
        stat,
        rho_policy(rho),
        alpha,
    )
    .map_err(to_py_err)?;
    report_to_py(py, &report)
}

/// Closed-form product distance of the perturbed block family.
#[pyfunction]
fn d_true(epsilon: f64) -> f64 {
    netustat::models::d_true(epsilon)
}

/// Normal-approximation band around a target coverage.
#[pyfunction]
fn binomial_band(k: usize, alpha: f64) -> PyResult<(f64, f64)> {
    netustat::sim::binomial_band(k, alpha).map_err(to_py_err)
}

/// Standard normal quantile.
#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    netustat::inference::normal_quantile(p).map_err(to_py_err)
}

/// Names of the built-in kernels.
#[pyfunction]
fn builtin_kernels() -> Vec<String> {
    netustat::kernels::BUILTIN_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[pymodule]
fn netustat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(ustat, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(d_true, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_band, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_kernels, m)?)?;
    Ok(())
}
