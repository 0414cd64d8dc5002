//! Python bindings for the graphkdv core library.

use kdv::graph::Scalar;
use kdv::group::timestep_apply;
use kdv::instability::{
    assemble_linearized, audit_assumptions, evolve_linearized, growing_modes, schrodinger_vertex, EigenOptions,
};
use kdv::profiles::check_vertex_conditions;
use kdv::resolvent::{apply_resolvent, characteristic_roots, BetaSign};
use kdv::schrodinger::assemble;
use kdv::{build_grid, make_profile, stationary_profile, Error, GraphFunction, GraphGrid, StarGraph};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn graph_function<T: Scalar>(grid: &GraphGrid, values: Vec<Vec<T>>) -> PyResult<GraphFunction<T>> {
    if values.len() != grid.edge_count() || values.iter().any(|v| v.len() != grid.n + 1) {
        return Err(PyValueError::new_err(format!(
            "expected {} edges of {} samples",
            grid.edge_count(),
            grid.n + 1
        )));
    }
    Ok(GraphFunction {
        grid: grid.clone(),
        values,
    })
}

/// A star graph with `m` incoming and `n` outgoing half-lines, truncated at
/// `L` and sampled with `N` cells per edge.
#[pyclass(frozen, module = "graphkdv")]
struct Grid {
    inner: GraphGrid,
}

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (m=1, n=1, alpha=vec![1.0], beta=vec![-1.0], L=40.0, N=2000))]
    #[allow(non_snake_case)]
    fn new(m: usize, n: usize, alpha: Vec<f64>, beta: Vec<f64>, L: f64, N: usize) -> PyResult<Self> {
        let widen = |v: Vec<f64>| if v.len() == 1 { vec![v[0]; m + n] } else { v };
        let graph = StarGraph::new(m, n, widen(alpha), widen(beta)).map_err(err)?;
        Ok(Self {
            inner: build_grid(graph, L, N).map_err(err)?,
        })
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn alpha(&self) -> Vec<f64> {
        self.inner.graph.alpha.clone()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.graph.beta.clone()
    }

    /// Signed node coordinates on edge `e`.
    fn x(&self, e: usize) -> PyResult<Vec<f64>> {
        if e >= self.inner.edge_count() {
            return Err(PyValueError::new_err(format!("no edge {e}")));
        }
        Ok((0..=self.inner.n).map(|k| self.inner.x(e, k)).collect())
    }

    fn __repr__(&self) -> String {
        let g = &self.inner.graph;
        format!("Grid(m={}, n={}, L={}, N={})", g.m, g.n, self.inner.l, self.inner.n)
    }
}

/// Stationary profile on two half-lines with equal coefficients `alpha` and
/// `beta = -omega`.
#[pyclass(frozen, module = "graphkdv")]
struct Profile {
    inner: kdv::Profile,
}

#[pymethods]
impl Profile {
    #[new]
    #[pyo3(signature = (z, alpha=1.0, omega=1.0))]
    fn new(z: f64, alpha: f64, omega: f64) -> PyResult<Self> {
        Ok(Self {
            inner: make_profile(z, alpha, omega).map_err(err)?,
        })
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind).to_lowercase()
    }

    #[getter]
    fn shift(&self) -> f64 {
        self.inner.shift
    }

    fn value(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    /// Derivative of the profile with respect to `omega`.
    fn psi(&self, x: f64) -> f64 {
        self.inner.psi(x)
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn mass_derivative(&self) -> f64 {
        self.inner.mass_derivative()
    }

    /// Largest defect in the vertex conditions.
    fn vertex_residual(&self) -> f64 {
        check_vertex_conditions(&self.inner).max()
    }
}

/// Samples the stationary profile of a balanced star, one list per edge.
#[pyfunction]
fn profile_on(grid: &Grid, z: f64) -> PyResult<Vec<Vec<f64>>> {
    let bp = stationary_profile(&grid.inner.graph, z).map_err(err)?;
    Ok(bp.sample(&grid.inner).values)
}

/// Eigenvalues below the essential spectrum of the Schrodinger operator
/// linearized at the stationary profile.
#[pyfunction]
#[pyo3(signature = (grid, z, k=4))]
fn spectrum(py: Python<'_>, grid: &Grid, z: f64, k: usize) -> PyResult<Py<PyAny>> {
    let bp = stationary_profile(&grid.inner.graph, z).map_err(err)?;
    let phi = bp.sample(&grid.inner);
    let op = assemble(&grid.inner, schrodinger_vertex(&bp), Some(&phi)).map_err(err)?;
    let report = op.spectrum_below_edge(k).map_err(err)?;
    to_py(py, &report)
}

/// Searches for a real growing mode of the linearized flow. The returned
/// dict carries the eigenfunction under `"eigenfunction"` when a mode exists.
#[pyfunction]
#[pyo3(signature = (grid, z, coarse_n=300, window=4.0))]
fn growing_mode(py: Python<'_>, grid: &Grid, z: f64, coarse_n: usize, window: f64) -> PyResult<Py<PyAny>> {
    let bp = stationary_profile(&grid.inner.graph, z).map_err(err)?;
    let op = assemble_linearized(&grid.inner, z, Some(&bp)).map_err(err)?;
    let opts = EigenOptions {
        coarse_n,
        window,
        ..Default::default()
    };
    let report = py.detach(|| growing_modes(&op, &opts)).map_err(err)?;
    let mut value = serde_json::to_value(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    if let Some(mode) = &report.mode {
        value["eigenfunction"] =
            serde_json::to_value(&mode.eigenfunction.values).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    }
    to_py(py, &value)
}

/// Evolves data under the linearized flow and fits the growth rate of the
/// norm on `fit = (t0, t1)`.
#[pyfunction]
#[pyo3(signature = (grid, z, v0, t, dt=0.02, fit=None))]
fn evolve(
    py: Python<'_>,
    grid: &Grid,
    z: f64,
    v0: Vec<Vec<f64>>,
    t: f64,
    dt: f64,
    fit: Option<(f64, f64)>,
) -> PyResult<Py<PyAny>> {
    let bp = stationary_profile(&grid.inner.graph, z).map_err(err)?;
    let op = assemble_linearized(&grid.inner, z, Some(&bp)).map_err(err)?;
    let v0 = graph_function(&grid.inner, v0)?;
    let tr = py.detach(|| evolve_linearized(&op, &v0, t, dt, fit)).map_err(err)?;
    to_py(py, &tr)
}

/// Numerical checks of the structural assumptions behind the instability
/// criterion.
#[pyfunction]
#[pyo3(signature = (grid, z, samples=50, seed=1))]
fn audit(py: Python<'_>, grid: &Grid, z: f64, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let bp = stationary_profile(&grid.inner.graph, z).map_err(err)?;
    let op = assemble_linearized(&grid.inner, z, Some(&bp)).map_err(err)?;
    let report = py.detach(|| audit_assumptions(&op, samples, seed)).map_err(err)?;
    to_py(py, &report)
}

/// Roots of `g^3 + beta g + lambda = 0` ordered as `Re g1 < 0 < Re g2, Re g3`.
#[pyfunction]
#[pyo3(signature = (lam, beta=-1.0))]
fn roots(lam: Complex64, beta: f64) -> PyResult<Vec<Complex64>> {
    let bs = BetaSign::from_beta(beta).map_err(err)?;
    Ok(characteristic_roots(lam, bs).map_err(err)?.gamma.to_vec())
}

/// Applies the Airy resolvent `(lam - A_Z)^{-1}` to `w`. Returns the result
/// and the relative equation residual.
#[pyfunction]
fn resolvent(
    py: Python<'_>,
    grid: &Grid,
    z: f64,
    lam: Complex64,
    w: Vec<Vec<Complex64>>,
) -> PyResult<(Vec<Vec<Complex64>>, f64)> {
    let bs = BetaSign::from_beta(grid.inner.graph.beta[0]).map_err(err)?;
    let w = graph_function(&grid.inner, w)?;
    let r = py.detach(|| apply_resolvent(&w, lam, z, bs)).map_err(err)?;
    Ok((r.v.values, r.residual))
}

/// Applies the Airy group `W(t)` to real data by time stepping.
#[pyfunction]
#[pyo3(signature = (grid, z, w, t, dt=1e-3))]
fn airy_group(py: Python<'_>, grid: &Grid, z: f64, w: Vec<Vec<f64>>, t: f64, dt: f64) -> PyResult<Vec<Vec<f64>>> {
    let w = graph_function(&grid.inner, w)?;
    let out = py.detach(|| timestep_apply(&w, t, dt, z)).map_err(err)?;
    Ok(out.values)
}

#[pymodule]
fn graphkdv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Profile>()?;
    m.add_function(wrap_pyfunction!(profile_on, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(growing_mode, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(roots, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent, m)?)?;
    m.add_function(wrap_pyfunction!(airy_group, m)?)?;
    Ok(())
}
