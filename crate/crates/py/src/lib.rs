//! Python bindings: models, posteriors, observables and experiments.
//!
//! Samples are passed as lists of lists (one inner list per point) and
//! parameter points as flat lists. Structured results come back as dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use slt::harness::{fit_table, run_experiment as run_exp, ExperimentConfig};
use slt::model::{Dataset, ModelId, ModelSpec};
use slt::observables::{compute_observables, EvalSet, ObservableSet};
use slt::posterior::{self, McmcSettings, PosteriorAtoms};

fn to_py(e: slt::Error) -> PyErr {
    if e.is_non_mixing() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Converts any serializable value into Python objects through JSON.
fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn dataset(points: Vec<Vec<f64>>, dim: usize) -> PyResult<Dataset> {
    let values: Vec<f64> = points
        .iter()
        .map(|p| {
            if p.len() == dim {
                Ok(p.iter().copied())
            } else {
                Err(PyValueError::new_err(format!(
                    "sample point has dimension {}, expected {dim}",
                    p.len()
                )))
            }
        })
        .collect::<PyResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Dataset::new(dim, values).map_err(to_py)
}

fn observables_dict<'py>(py: Python<'py>, o: &ObservableSet) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, o)
}

/// A built-in model addressed by its string id.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    spec: ModelSpec,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(id: &str) -> PyResult<Self> {
        Ok(PyModel {
            spec: ModelSpec::from_id(id).map_err(to_py)?,
        })
    }

    #[getter]
    fn id(&self) -> &'static str {
        self.spec.id.as_str()
    }

    #[getter]
    fn dim_x(&self) -> usize {
        self.spec.dim_x
    }

    #[getter]
    fn dim_w(&self) -> usize {
        self.spec.dim_w
    }

    #[getter]
    fn param_box(&self) -> Vec<(f64, f64)> {
        self.spec.param_box.clone()
    }

    fn min_loss(&self) -> f64 {
        self.spec.min_loss()
    }

    fn loss(&self, w: Vec<f64>) -> PyResult<f64> {
        self.spec.loss(&w).map_err(to_py)
    }

    fn kl_true(&self, w: Vec<f64>) -> PyResult<f64> {
        self.spec.kl_true(&w).map_err(to_py)
    }

    fn log_p(&self, x: Vec<f64>, w: Vec<f64>) -> PyResult<f64> {
        self.spec.log_p(&x, &w).map_err(to_py)
    }

    fn sample_true(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        let d = self.spec.sample_true(n, seed).map_err(to_py)?;
        Ok(d.points().map(|p| p.to_vec()).collect())
    }

    fn renormalizability_ratio(&self, eps: f64) -> PyResult<f64> {
        self.spec.renormalizability_ratio(eps).map_err(to_py)
    }

    fn theory_card<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.spec.theory_card())
    }

    fn __repr__(&self) -> String {
        format!("Model('{}')", self.spec.id)
    }
}

/// A posterior reduced to weighted atoms.
#[pyclass(name = "Posterior", frozen)]
struct PyPosterior {
    atoms: PosteriorAtoms,
    beta: f64,
    min_ess: Option<f64>,
    max_rhat: Option<f64>,
}

#[pymethods]
impl PyPosterior {
    #[getter]
    fn beta(&self) -> f64 {
        self.beta
    }

    #[getter]
    fn min_ess(&self) -> Option<f64> {
        self.min_ess
    }

    #[getter]
    fn max_rhat(&self) -> Option<f64> {
        self.max_rhat
    }

    fn __len__(&self) -> usize {
        self.atoms.len()
    }

    /// Posterior mean of each parameter coordinate.
    fn mean(&self) -> Vec<f64> {
        (0..self.atoms.dim())
            .map(|k| self.atoms.expect(|w| w[k]))
            .collect()
    }
}

/// Expected observables under the learning-curve laws; `None` when the
/// theory constants needed are unknown.
#[pyfunction]
fn theory_predict<'py>(
    py: Python<'py>,
    model: &str,
    beta: f64,
    n: usize,
) -> PyResult<Option<Bound<'py, PyAny>>> {
    let card = ModelSpec::from_id(model).map_err(to_py)?.theory_card();
    match card.predict(beta, n) {
        Ok(o) => Ok(Some(observables_dict(py, &o)?)),
        Err(slt::Error::MissingConstant(_)) => Ok(None),
        Err(e) => Err(to_py(e)),
    }
}

#[pyfunction]
fn run_quadrature(model: &PyModel, data: Vec<Vec<f64>>, beta: f64) -> PyResult<PyPosterior> {
    let data = dataset(data, model.spec.dim_x)?;
    let grid = posterior::run_quadrature(&model.spec, &data, beta).map_err(to_py)?;
    Ok(PyPosterior {
        atoms: grid.atoms(),
        beta,
        min_ess: None,
        max_rhat: None,
    })
}

#[pyfunction]
#[pyo3(signature = (model, data, beta, seed, n_chains=4, burn_in=5000, kept_per_chain=2500, thin=4))]
#[allow(clippy::too_many_arguments)]
fn run_mcmc(
    model: &PyModel,
    data: Vec<Vec<f64>>,
    beta: f64,
    seed: u64,
    n_chains: usize,
    burn_in: usize,
    kept_per_chain: usize,
    thin: usize,
) -> PyResult<PyPosterior> {
    let data = dataset(data, model.spec.dim_x)?;
    let settings = McmcSettings {
        n_chains,
        burn_in,
        kept_per_chain,
        thin,
        ..McmcSettings::with_beta(beta)
    };
    let draws = posterior::run_mcmc(&model.spec, &data, &settings, seed).map_err(to_py)?;
    Ok(PyPosterior {
        atoms: PosteriorAtoms::from(&draws),
        beta,
        min_ess: Some(draws.diagnostics.min_ess()),
        max_rhat: Some(draws.diagnostics.max_rhat()),
    })
}

/// The six observables, WAIC and `Vt` for a posterior and its training data.
///
/// `E_X` uses a Gauss-Hermite rule of `hermite_order` nodes per axis unless
/// `test` points are given.
#[pyfunction]
#[pyo3(signature = (model, posterior, data, test=None, hermite_order=48))]
fn observables<'py>(
    py: Python<'py>,
    model: &PyModel,
    posterior: &PyPosterior,
    data: Vec<Vec<f64>>,
    test: Option<Vec<Vec<f64>>>,
    hermite_order: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = &model.spec;
    let data = dataset(data, spec.dim_x)?;
    let eval = match test {
        Some(t) => EvalSet::from_dataset(&dataset(t, spec.dim_x)?),
        None => EvalSet::hermite(spec, hermite_order).map_err(to_py)?,
    };
    let o =
        compute_observables(spec, &posterior.atoms, posterior.beta, &data, &eval).map_err(to_py)?;
    observables_dict(py, &o)
}

/// Runs an experiment from TOML config text and returns the fit report
/// together with the aggregate means.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_toml: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(to_py)?;
    let out = py.detach(|| run_exp(&cfg)).map_err(to_py)?;
    let report = fit_table(&out.table).map_err(to_py)?;
    let result = PyDict::new(py);
    result.set_item("fit", json_to_py(py, &report)?)?;
    let rows = out
        .table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("n", r.n)?;
            for s in slt::harness::Series::ALL {
                let m = r.get(s);
                d.set_item(format!("{}_mean", s.name()), m.mean)?;
                d.set_item(format!("{}_se", s.name()), m.se)?;
            }
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    result.set_item("aggregate", rows)?;
    Ok(result)
}

#[pyfunction]
fn model_ids() -> Vec<&'static str> {
    ModelId::ALL.iter().map(|m| m.as_str()).collect()
}

#[pymodule]
fn slt_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyPosterior>()?;
    m.add_function(wrap_pyfunction!(theory_predict, m)?)?;
    m.add_function(wrap_pyfunction!(run_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(run_mcmc, m)?)?;
    m.add_function(wrap_pyfunction!(observables, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(model_ids, m)?)?;
    Ok(())
}
