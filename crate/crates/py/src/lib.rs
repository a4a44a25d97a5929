//! Python bindings for dfchain.

use std::sync::Arc;

use dfchain::absorbing::{self, MAX_KN_ITERS};
use dfchain::chain::{self, ChainConfig};
use dfchain::dirichlet::{self, DirichletParams};
use dfchain::operators::{power_iterate, GridDensity, IterationStatus, KernelOptions, SimplexGrid, TransferOperator};
use dfchain::{ifs, SimplexPoint};
use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyString};

fn err(e: dfchain::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Weight field p(x) on the simplex.
#[pyclass(name = "WeightSpec", frozen)]
struct PyWeightSpec {
    inner: dfchain::WeightSpec,
}

#[pymethods]
impl PyWeightSpec {
    /// Accepts a JSON string, a dict in the same schema, or a callable
    /// `f(x) -> p` on barycentric coordinates (then `dim` is required).
    #[new]
    #[pyo3(signature = (spec, dim = None, name = "python"))]
    fn new(py: Python<'_>, spec: &Bound<'_, PyAny>, dim: Option<usize>, name: &str) -> PyResult<Self> {
        if let Ok(s) = spec.cast::<PyString>() {
            return Self::from_json(&s.to_cow()?);
        }
        if spec.is_instance_of::<PyDict>() {
            let text: String = py.import("json")?.call_method1("dumps", (spec,))?.extract()?;
            return Self::from_json(&text);
        }
        if spec.is_callable() {
            let dim = dim.ok_or_else(|| PyTypeError::new_err("dim is required for a callable spec"))?;
            let f: Py<PyAny> = spec.clone().unbind();
            let cb: dfchain::weights::Callback = Arc::new(move |x: &[f64]| {
                Python::attach(|py| {
                    f.call1(py, (x.to_vec(),)).and_then(|v| v.extract::<Vec<f64>>(py)).unwrap_or_else(|_| vec![f64::NAN; x.len()])
                })
            });
            let inner = py.detach(|| dfchain::WeightSpec::programmatic(name, dim, true, cb)).map_err(err)?;
            return Ok(Self { inner });
        }
        Err(PyTypeError::new_err("spec must be a JSON string, a dict or a callable"))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: dfchain::WeightSpec::from_json(text).map_err(err)? })
    }

    #[staticmethod]
    fn constant(p: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: dfchain::WeightSpec::constant(p).map_err(err)? })
    }

    #[staticmethod]
    fn affine(theta: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: dfchain::WeightSpec::affine(theta).map_err(err)? })
    }

    /// Built-in programmatic spec such as "identity" or "k0-stationary".
    #[staticmethod]
    #[pyo3(signature = (name, dim = 2))]
    fn named(name: &str, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: dfchain::WeightSpec::named(name, dim, true).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// p(x) for a point given by its d coordinates.
    fn eval(&self, py: Python<'_>, x: Vec<f64>) -> PyResult<Vec<f64>> {
        py.detach(|| SimplexPoint::new(x).and_then(|p| self.inner.eval(&p))).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("WeightSpec({})", self.inner.to_json())
    }
}

/// Runs one replica of the chain. Returns (points, choices) where each choice is (i, t).
#[pyfunction]
#[pyo3(signature = (spec, start, steps, seed = 0, replica = 0))]
fn simulate(
    py: Python<'_>,
    spec: &PyWeightSpec,
    start: Vec<f64>,
    steps: usize,
    seed: u64,
    replica: u64,
) -> PyResult<(Vec<Vec<f64>>, Vec<(usize, f64)>)> {
    let traj = py
        .detach(|| {
            let cfg = ChainConfig::new(spec.inner.clone(), SimplexPoint::new(start)?, steps, seed, 0)?;
            chain::simulate_replica(&cfg, replica)
        })
        .map_err(err)?;
    let points = traj.points.iter().map(|p| p.coords().to_vec()).collect();
    let choices = traj.choices.iter().map(|c| (c.i, c.t)).collect();
    Ok((points, choices))
}

fn grid_dict<'py>(py: Python<'py>, g: &GridDensity) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("resolution", g.grid.resolution())?;
    d.set_item("centers", g.grid.centers())?;
    d.set_item("masses", g.masses.clone())?;
    Ok(d)
}

/// Fixed point of the discretized transfer operator, started from the uniform density.
#[pyfunction]
#[pyo3(signature = (spec, resolution = 64, tol = 1e-8, max_iter = 10_000))]
fn invariant_density<'py>(
    py: Python<'py>,
    spec: &PyWeightSpec,
    resolution: usize,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let res = py
        .detach(|| {
            let grid = SimplexGrid::new(spec.inner.dim(), resolution)?;
            let op = TransferOperator::new(&spec.inner, &grid, KernelOptions::default())?;
            power_iterate(&GridDensity::uniform(grid), &op, tol, max_iter)
        })
        .map_err(err)?;
    let d = grid_dict(py, &res.density)?;
    let status = match res.status {
        IterationStatus::Converged => "converged",
        IterationStatus::NotConverged => "not_converged",
        IterationStatus::Degenerate => "degenerate",
    };
    d.set_item("status", status)?;
    d.set_item("iterations", res.iterations)?;
    d.set_item("final_step", res.final_step)?;
    d.set_item("degenerate_reason", res.degenerate_reason)?;
    Ok(d)
}

/// Exact Dirichlet(θ) mass of every grid cell.
#[pyfunction]
fn dirichlet_cell_masses<'py>(py: Python<'py>, theta: Vec<f64>, resolution: usize) -> PyResult<Bound<'py, PyDict>> {
    let g = py
        .detach(|| {
            let params = DirichletParams::new(theta)?;
            let grid = SimplexGrid::new(params.dim(), resolution)?;
            dirichlet::cell_masses(&params, &grid)
        })
        .map_err(err)?;
    grid_dict(py, &g)
}

/// Minimal absorbing sets as a JSON string, with escape checks under "verification".
#[pyfunction]
#[pyo3(signature = (spec, resolution = 64, samples = 2000, seed = 0))]
fn classify(py: Python<'_>, spec: &PyWeightSpec, resolution: usize, samples: usize, seed: u64) -> PyResult<String> {
    py.detach(|| {
        let class = absorbing::classify(&spec.inner, resolution, MAX_KN_ITERS)?;
        let checks = absorbing::verify_classification(&spec.inner, &class, samples, seed)?;
        let mut report = class.to_json();
        report["verification"] = serde_json::to_value(&checks)?;
        Ok(report.to_string())
    })
    .map_err(err)
}

/// Uniqueness report as a JSON string.
#[pyfunction]
#[pyo3(signature = (spec, alpha = 1.0, samples = 20_000))]
fn check_uniqueness(py: Python<'_>, spec: &PyWeightSpec, alpha: f64, samples: usize) -> PyResult<String> {
    py.detach(|| {
        let r = ifs::check_uniqueness(&spec.inner, alpha, samples)?;
        Ok(serde_json::to_string(&r)?)
    })
    .map_err(err)
}

#[pyfunction]
fn contraction_coefficient(alpha: f64) -> PyResult<f64> {
    ifs::contraction_coefficient(alpha).map_err(err)
}

#[pymodule]
fn pydfchain(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeightSpec>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(invariant_density, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_cell_masses, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(check_uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(contraction_coefficient, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
