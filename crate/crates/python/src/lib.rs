//! Python bindings for `zvar_core`.
//!
//! Results and reports cross the boundary as plain dicts built from the same
//! JSON the CLI prints.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;

use zvar_core::cov::{self, ChangeOfVariable};
use zvar_core::integral::{SpecDoc, ZIntegralSpec};
use zvar_core::taper::{self, TerminationFunction};
use zvar_core::verify;
use zvar_core::zeval::{self, EvalConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Accept `None`, a JSON string or a dict of config fields.
fn config_from(py: Python<'_>, config: Option<&Bound<'_, PyAny>>) -> PyResult<EvalConfig> {
    let Some(obj) = config else {
        return Ok(EvalConfig::default());
    };
    if obj.is_none() {
        return Ok(EvalConfig::default());
    }
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        py.import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    let cfg: EvalConfig = serde_json::from_str(&text).map_err(value_error)?;
    cfg.validate().map_err(value_error)?;
    Ok(cfg)
}

/// Termination function `z(s)` on `[0, c]`.
#[pyclass(name = "TerminationFunction", module = "zvar", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTermination {
    inner: TerminationFunction,
}

#[pymethods]
impl PyTermination {
    /// Smooth polynomial taper of width `c`.
    #[staticmethod]
    #[pyo3(signature = (c = 1.0))]
    fn smooth(c: f64) -> PyResult<Self> {
        let inner = taper::make_smooth_taper(c).map_err(value_error)?;
        Ok(PyTermination { inner })
    }

    /// Taper matched to `sin(omega x)` tails.
    #[staticmethod]
    #[pyo3(signature = (omega, c = 1.0))]
    fn matched_trig(omega: f64, c: f64) -> PyResult<Self> {
        let inner = taper::make_matched_trig(omega, c).map_err(value_error)?;
        Ok(PyTermination { inner })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = TerminationFunction::from_spec_string(text).map_err(value_error)?;
        Ok(PyTermination { inner })
    }

    fn __call__(&self, s: f64) -> PyResult<f64> {
        self.inner.eval(s).map_err(value_error)
    }

    #[getter]
    fn width(&self) -> f64 {
        self.inner.width()
    }

    /// Residuals `(∫ cos(ωs) z, ∫ sin(ωs) z − 1/ω)` of the matching conditions.
    fn moments(&self, omega: f64) -> PyResult<(f64, f64)> {
        taper::check_moments(&self.inner, omega).map_err(value_error)
    }

    fn __str__(&self) -> String {
        self.inner.spec_string()
    }

    fn __repr__(&self) -> String {
        format!("TerminationFunction({:?})", self.inner.spec_string())
    }
}

/// An infinite or finite Z-integral.
#[pyclass(name = "Integral", module = "zvar", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyIntegral {
    inner: ZIntegralSpec,
}

#[pymethods]
impl PyIntegral {
    /// `∫_a^∞ f` with termination function `z`.
    #[staticmethod]
    #[pyo3(signature = (f, a, z = "taper:c=1", var = "x"))]
    fn infinite(f: &str, a: f64, z: &str, var: &str) -> PyResult<Self> {
        let inner = ZIntegralSpec::infinite(f, var, a, z).map_err(value_error)?;
        Ok(PyIntegral { inner })
    }

    /// `∫_0^beta g` with boundary taper `w`.
    #[staticmethod]
    #[pyo3(signature = (g, beta, w = "wfromz:taper:c=1", var = "u"))]
    fn finite(g: &str, beta: f64, w: &str, var: &str) -> PyResult<Self> {
        let inner = ZIntegralSpec::finite(g, var, beta, w).map_err(value_error)?;
        Ok(PyIntegral { inner })
    }

    /// Build from the JSON spec document used by the CLI and corpus.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: SpecDoc = serde_json::from_str(text).map_err(value_error)?;
        let inner = doc.build().map_err(value_error)?;
        Ok(PyIntegral { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        let doc = self
            .inner
            .to_doc()
            .ok_or_else(|| PyValueError::new_err("taper has no spec string"))?;
        serde_json::to_string(&doc).map_err(value_error)
    }

    #[getter]
    fn integrand(&self) -> String {
        self.inner.integrand().to_string()
    }

    #[getter]
    fn var(&self) -> &str {
        self.inner.var()
    }

    #[getter]
    fn is_infinite(&self) -> bool {
        self.inner.is_infinite()
    }

    /// Evaluate; `config` is a dict or JSON string of config fields.
    #[pyo3(signature = (config = None))]
    fn evaluate<'py>(&self, py: Python<'py>, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
        let cfg = config_from(py, config)?;
        let spec = self.inner.clone();
        let result = py.detach(move || zeval::evaluate(&spec, &cfg)).map_err(value_error)?;
        to_py(py, &result)
    }

    /// Apply a change of variable given as a spec string such as `power:d=1,r=2`.
    #[pyo3(signature = (cov, allow_inconclusive = false))]
    fn transform(&self, cov: &str, allow_inconclusive: bool) -> PyResult<Self> {
        let map = ChangeOfVariable::from_spec_string(cov, &self.inner).map_err(value_error)?;
        let inner = cov::apply_cov(&self.inner, &map, allow_inconclusive).map_err(value_error)?;
        Ok(PyIntegral { inner })
    }

    /// Move between the infinite and finite forms through `u = d·e^(-alpha x)`.
    #[pyo3(signature = (d = 1.0, alpha = 1.0))]
    fn bridge(&self, d: f64, alpha: f64) -> PyResult<Self> {
        let inner = cov::bridge_transform(&self.inner, d, alpha).map_err(value_error)?;
        Ok(PyIntegral { inner })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Integral({:?})", self.inner.to_string())
    }
}

/// Validation report for a change of variable as a dict.
#[pyfunction]
fn validate_cov<'py>(py: Python<'py>, integral: &PyIntegral, cov: &str) -> PyResult<Bound<'py, PyAny>> {
    let map = ChangeOfVariable::from_spec_string(cov, &integral.inner).map_err(value_error)?;
    let report = cov::validate_cov(&map).map_err(value_error)?;
    let checks: Vec<serde_json::Value> = report
        .checks
        .iter()
        .map(|c| serde_json::json!({ "id": c.id, "passed": c.passed, "evidence": c.evidence }))
        .collect();
    let doc = serde_json::json!({
        "verdict": report.verdict.to_string(),
        "checks": checks,
        "sampled_domain": [report.sampled_domain.0, report.sampled_domain.1],
    });
    to_py(py, &doc)
}

/// Evaluate both integrals and return the verification outcome as a dict.
#[pyfunction]
#[pyo3(signature = (left, right, tol = 1e-5, config = None, right_config = None))]
fn compare<'py>(
    py: Python<'py>,
    left: &PyIntegral,
    right: &PyIntegral,
    tol: f64,
    config: Option<&Bound<'py, PyAny>>,
    right_config: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let lcfg = config_from(py, config)?;
    let rcfg = match right_config {
        Some(_) => config_from(py, right_config)?,
        None => lcfg.clone(),
    };
    let (l, r) = (left.inner.clone(), right.inner.clone());
    let outcome = py
        .detach(move || verify::compare_pair_with(&l, &lcfg, &r, &rcfg, tol, ""))
        .map_err(value_error)?;
    to_py(py, &outcome)
}

/// Classify a bracket sequence as converged, oscillatory or drifting.
#[pyfunction]
fn classify(values: Vec<f64>, window: usize, tol: f64) -> PyResult<&'static str> {
    zeval::classify_sequence(&values, window, tol)
        .map(|s| s.as_str())
        .map_err(value_error)
}

/// Run a JSONL corpus file and return the suite report as a dict.
#[pyfunction]
#[pyo3(signature = (path, config = None))]
fn run_corpus<'py>(py: Python<'py>, path: &str, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config_from(py, config)?;
    let cases = verify::load_corpus(std::path::Path::new(path)).map_err(value_error)?;
    let report = py
        .detach(move || verify::run_suite(&cases, &cfg))
        .map_err(value_error)?;
    to_py(py, &report)
}

/// The existence-asymmetry demonstration as a dict.
#[pyfunction]
fn demo<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(verify::demo_existence_asymmetry);
    to_py(py, &report)
}

#[pymodule]
fn zvar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTermination>()?;
    m.add_class::<PyIntegral>()?;
    m.add_function(wrap_pyfunction!(validate_cov, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(run_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(demo, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
