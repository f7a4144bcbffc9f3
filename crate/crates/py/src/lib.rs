//! Python module `endmodel`: build family models, discretize them, measure
//! distances and thickness, and classify rays.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use endmodel::builders;
use endmodel::ray::{classify, trace_ray, Strategy};
use endmodel::report::build_report;
use endmodel::{discretize, validate, MetricGraph, ModelEnd};

fn to_py(e: endmodel::Error) -> PyErr {
    if e.is_invalid_input() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_object<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_dict(
    py: Python<'_>,
    dict: Option<&Bound<'_, PyDict>>,
) -> PyResult<Option<serde_json::Map<String, serde_json::Value>>> {
    let Some(d) = dict else { return Ok(None) };
    let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
    serde_json::from_str(&text).map(Some).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn defaults(model: &ModelEnd, c: Option<f64>, eps: Option<f64>) -> (f64, f64) {
    (
        c.unwrap_or(4.0 * model.constants.diameter_bound),
        eps.unwrap_or(model.constants.epsilon0 * (-5.0f64).exp()),
    )
}

#[pyclass(name = "Model", module = "endmodel", frozen)]
struct PyModel {
    inner: ModelEnd,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel { inner: ModelEnd::from_json(text).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    /// Violations as `(rule, message)` pairs; empty when valid.
    fn validate(&self) -> Vec<(String, String)> {
        validate(&self.inner).violations.into_iter().map(|v| (v.rule, v.message)).collect()
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.inner.blocks.len()
    }

    fn discretize(&self, py: Python<'_>) -> PyResult<PyGraph> {
        let g = py.detach(|| discretize(&self.inner)).map_err(to_py)?;
        Ok(PyGraph { inner: Arc::new(g), model: self.inner.clone() })
    }

    fn __repr__(&self) -> String {
        format!("Model(blocks={})", self.inner.blocks.len())
    }
}

#[pyclass(name = "Graph", module = "endmodel", frozen)]
struct PyGraph {
    inner: Arc<MetricGraph>,
    model: ModelEnd,
}

#[pymethods]
impl PyGraph {
    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.inner.block_count()
    }

    fn node_ids(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.id.clone()).collect()
    }

    fn injectivity_radius(&self, id: &str) -> PyResult<f64> {
        let v = self.inner.require(id).map_err(to_py)?;
        Ok(self.inner.injectivity_radius(v))
    }

    /// Distance and node path between two ids.
    fn distance(&self, py: Python<'_>, a: &str, b: &str) -> PyResult<(f64, Vec<String>)> {
        py.detach(|| self.inner.shortest_distance(a, b)).map_err(to_py)
    }

    fn thickness(&self, block: usize) -> PyResult<f64> {
        self.inner.block_thickness(block).map_err(to_py)
    }

    fn thicknesses(&self, py: Python<'_>) -> PyResult<Vec<f64>> {
        let g = &self.inner;
        py.detach(|| (0..g.block_count()).map(|i| g.block_thickness(i)).collect::<endmodel::Result<Vec<_>>>())
            .map_err(to_py)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }

    /// Traces and classifies a ray. `strategy` is one of `vertical`,
    /// `minimizing`, `winding`, `explicit`; returns the classification as a
    /// dict with `exiting`, `am_verdict`, `thickness_verdict`, `horosphere`,
    /// `profile` and `verdict`.
    #[pyo3(signature = (strategy, horizon=20, c=None, eps=None, component=None, nodes=None))]
    #[allow(clippy::too_many_arguments)]
    fn classify<'py>(
        &self,
        py: Python<'py>,
        strategy: &str,
        horizon: usize,
        c: Option<f64>,
        eps: Option<f64>,
        component: Option<String>,
        nodes: Option<Vec<String>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let s = match strategy {
            "minimizing" => Strategy::Minimizing,
            "vertical" => {
                let component = match component {
                    Some(c) => c.as_str().into(),
                    None => self
                        .model
                        .surface(0)
                        .map(|s| s.components[0].id.clone())
                        .ok_or_else(|| PyValueError::new_err("model has no level 0"))?,
                };
                Strategy::Vertical { component }
            }
            "winding" => Strategy::Winding { loops: builders::winding_loops(&self.model) },
            "explicit" => Strategy::Explicit {
                nodes: nodes.ok_or_else(|| PyValueError::new_err("explicit strategy needs nodes"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown strategy {}", other))),
        };
        let (c, eps) = defaults(&self.model, c, eps);
        let g = &self.inner;
        let cls = py
            .detach(|| {
                let ray = trace_ray(g, &s, horizon.min(g.level_count()))?;
                classify(g, &ray, c, eps)
            })
            .map_err(to_py)?;
        let out = to_object(py, &cls)?;
        out.set_item("verdict", cls.verdict_line())?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Model of an example family; `params` overrides the family defaults.
#[pyfunction]
#[pyo3(signature = (family, params=None, seed=0))]
fn build(py: Python<'_>, family: &str, params: Option<&Bound<'_, PyDict>>, seed: u64) -> PyResult<PyModel> {
    let overrides = from_dict(py, params)?;
    let p = builders::family_params(family, overrides.as_ref(), seed).map_err(to_py)?;
    let inner = py.detach(|| builders::build(&p)).map_err(to_py)?;
    Ok(PyModel { inner })
}

/// Full plain-text report for an example family.
#[pyfunction]
#[pyo3(signature = (family, params=None, horizon=20, c=None, eps=None))]
fn report(
    py: Python<'_>,
    family: &str,
    params: Option<&Bound<'_, PyDict>>,
    horizon: usize,
    c: Option<f64>,
    eps: Option<f64>,
) -> PyResult<String> {
    let overrides = from_dict(py, params)?;
    let p = builders::family_params(family, overrides.as_ref(), 0).map_err(to_py)?;
    py.detach(|| {
        let model = builders::build(&p)?;
        let g = discretize(&model)?;
        let (c, eps) = defaults(&model, c, eps);
        let report = build_report(&model, &g, horizon, c, eps)?;
        let config = serde_json::json!({ "params": p, "horizon": horizon, "C": c, "eps": eps });
        Ok(report.render(&serde_json::to_string_pretty(&config)?))
    })
    .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "endmodel")]
fn endmodel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add("FAMILIES", builders::FAMILY_NAMES.to_vec())?;
    Ok(())
}
