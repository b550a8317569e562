//! Python bindings: structured meshes, refinement studies and the inf-sup probe.

use std::collections::BTreeMap;

use mcs_core::harness::{self, ConvergenceReport, StudyKind};
use mcs_core::manufactured::exact_fields;
use mcs_core::mesh::build_structured_mesh;
use mcs_core::McsError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: McsError) -> PyErr {
    match e {
        McsError::InvalidMesh(_) | McsError::Unsupported(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn study_kind(s: &str) -> PyResult<StudyKind> {
    match s {
        "convergence" => Ok(StudyKind::Convergence),
        "robustness" => Ok(StudyKind::Robustness),
        "infsup" => Ok(StudyKind::Infsup),
        "patch" => Ok(StudyKind::Patch),
        _ => Err(PyValueError::new_err(format!("unknown study {s:?}"))),
    }
}

/// Flattens a serializable record of numbers into a name to value map.
fn numeric_fields<T: serde::Serialize>(v: &T) -> BTreeMap<String, f64> {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::Object(m)) => m.into_iter().filter_map(|(k, v)| Some((k, v.as_f64()?))).collect(),
        _ => BTreeMap::new(),
    }
}

/// Conforming simplicial mesh of the unit square or cube.
#[pyclass(module = "mcs_stokes", frozen)]
struct Mesh(mcs_core::mesh::Mesh);

#[pymethods]
impl Mesh {
    /// `n` subdivisions per edge: two triangles per square, six tetrahedra per cube.
    #[staticmethod]
    fn structured(dim: usize, n: usize) -> PyResult<Self> {
        build_structured_mesh(dim, n).map(Mesh).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    #[getter]
    fn num_elements(&self) -> usize {
        self.0.num_elements()
    }

    #[getter]
    fn num_facets(&self) -> usize {
        self.0.facets.len()
    }

    #[getter]
    fn num_boundary_facets(&self) -> usize {
        self.0.num_boundary_facets()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        self.0.vertices.iter().map(|p| p[..self.0.dim].to_vec()).collect()
    }

    #[getter]
    fn elements(&self) -> Vec<Vec<usize>> {
        self.0.elements.clone()
    }

    fn volume(&self, element: usize) -> PyResult<f64> {
        if element >= self.0.num_elements() {
            return Err(PyValueError::new_err(format!("element {element} out of range")));
        }
        Ok(self.0.element_volume(element))
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(dim={}, elements={}, h={:.4})", self.0.dim, self.0.num_elements(), self.0.h)
    }
}

/// Parameters of a refinement study.
#[pyclass(module = "mcs_stokes", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct StudyConfig {
    dim: usize,
    order: usize,
    levels: Vec<usize>,
    study: String,
    nu: f64,
    quad_degree: Option<usize>,
}

#[pymethods]
impl StudyConfig {
    #[new]
    #[pyo3(signature = (dim, order, levels, study = "convergence".to_string(), nu = 1e-3, quad_degree = None))]
    fn new(
        dim: usize,
        order: usize,
        levels: Vec<usize>,
        study: String,
        nu: f64,
        quad_degree: Option<usize>,
    ) -> PyResult<Self> {
        study_kind(&study)?;
        Ok(Self { dim, order, levels, study, nu, quad_degree })
    }

    fn __repr__(&self) -> String {
        format!(
            "StudyConfig(dim={}, order={}, levels={:?}, study={:?}, nu={})",
            self.dim, self.order, self.levels, self.study, self.nu
        )
    }
}

impl StudyConfig {
    fn core(&self) -> PyResult<harness::StudyConfig> {
        let mut c = harness::StudyConfig::new(self.dim, self.order, self.levels.clone(), study_kind(&self.study)?);
        c.nu = self.nu;
        c.quad_degree = self.quad_degree;
        Ok(c)
    }
}

/// Outcome of one acceptance threshold.
#[pyclass(module = "mcs_stokes", frozen, get_all)]
struct Check {
    name: String,
    value: f64,
    limit: String,
    passed: bool,
}

#[pymethods]
impl Check {
    fn __repr__(&self) -> String {
        format!("Check({:?}, {:e}, {:?}, passed={})", self.name, self.value, self.limit, self.passed)
    }
}

/// Rows of a finished study, with per-level errors and orders of convergence.
#[pyclass(module = "mcs_stokes", frozen)]
struct Report(ConvergenceReport);

#[pymethods]
impl Report {
    #[getter]
    fn num_rows(&self) -> usize {
        self.0.rows.len()
    }

    #[getter]
    fn levels(&self) -> Vec<usize> {
        self.0.rows.iter().map(|r| r.n).collect()
    }

    #[getter]
    fn residuals(&self) -> Vec<Option<f64>> {
        self.0.rows.iter().map(|r| r.residual).collect()
    }

    /// Error quantities of row `i`; empty for studies without a solve.
    fn errors(&self, i: usize) -> PyResult<BTreeMap<String, f64>> {
        let row = self.0.rows.get(i).ok_or_else(|| PyValueError::new_err(format!("row {i} out of range")))?;
        Ok(row.errors.as_ref().map(numeric_fields).unwrap_or_default())
    }

    /// Orders of convergence of row `i` against row `i - 1`.
    fn eoc(&self, i: usize) -> PyResult<BTreeMap<String, f64>> {
        let row = self.0.rows.get(i).ok_or_else(|| PyValueError::new_err(format!("row {i} out of range")))?;
        Ok(numeric_fields(&row.eoc))
    }

    /// Study-specific quantities of row `i`.
    fn extra(&self, i: usize) -> PyResult<BTreeMap<String, f64>> {
        let row = self.0.rows.get(i).ok_or_else(|| PyValueError::new_err(format!("row {i} out of range")))?;
        Ok(row.extra.clone())
    }

    fn checks(&self) -> Vec<Check> {
        harness::check_report(&self.0)
            .into_iter()
            .map(|c| Check { name: c.name, value: c.value, limit: c.limit, passed: c.pass })
            .collect()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }
}

/// Runs a study; the interpreter lock is released while it computes.
#[pyfunction]
fn run_study(py: Python<'_>, config: &StudyConfig) -> PyResult<Report> {
    let c = config.core()?;
    py.detach(|| harness::run_study(&c)).map(Report).map_err(to_py)
}

/// Errors of a single manufactured-solution solve on the structured mesh with `n` subdivisions.
#[pyfunction]
#[pyo3(signature = (dim, order, n, nu = 1e-3))]
fn solve(py: Python<'_>, dim: usize, order: usize, n: usize, nu: f64) -> PyResult<BTreeMap<String, f64>> {
    py.detach(|| {
        let mut c = harness::StudyConfig::new(dim, order, vec![n], StudyKind::Convergence);
        c.nu = nu;
        let art = harness::solve_level(&c, n, &exact_fields(dim, nu)?)?;
        let mut out = numeric_fields(&art.errors);
        out.insert("residual".into(), art.solution.residual);
        out.insert("unknowns".into(), art.system.offsets.total as f64);
        Ok(out)
    })
    .map_err(to_py)
}

/// Smallest normalized inf-sup value of the constraint block; dense, small meshes only.
#[pyfunction]
#[pyo3(signature = (mesh, order, enriched = true))]
fn infsup(py: Python<'_>, mesh: &Mesh, order: usize, enriched: bool) -> PyResult<f64> {
    py.detach(|| harness::estimate_infsup(&mesh.0, order, enriched)).map(|r| r.value).map_err(to_py)
}

#[pymodule]
fn mcs_stokes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<StudyConfig>()?;
    m.add_class::<Check>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(infsup, m)?)?;
    Ok(())
}
