//! Python bindings: meshes, manufactured cases, single-level solves and
//! convergence studies.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use crmixed::mesh::build_initial_mesh;
use crmixed::study::{evaluate_level, solve_level, StudyRecord};
use crmixed::{CaseTag, DomainTag, Error, ManufacturedCase, Point, StudyConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::UnknownCase(_)
        | Error::UnknownDomain(_)
        | Error::Config(_)
        | Error::InvalidViscosity(_)
        | Error::UnsupportedDegree { .. }
        | Error::InvalidId { .. }
        | Error::DimensionMismatch(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Mesh", module = "crmixed", skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: crmixed::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Level-0 mesh of `m_shape`, `crack_diamond` or `kovasznay_rect`.
    #[staticmethod]
    fn initial(domain: &str) -> PyResult<Self> {
        let tag: DomainTag = domain.parse().map_err(to_py)?;
        Ok(PyMesh {
            inner: build_initial_mesh(tag).map_err(to_py)?,
        })
    }

    /// Triangles given by counter-clockwise vertex ids.
    #[staticmethod]
    fn from_triangles(vertices: Vec<(f64, f64)>, triangles: Vec<[usize; 3]>) -> PyResult<Self> {
        let pts = vertices.into_iter().map(|(x, y)| Point::new(x, y)).collect();
        Ok(PyMesh {
            inner: crmixed::Mesh::from_triangles(pts, triangles).map_err(to_py)?,
        })
    }

    fn refined(&self, k: usize) -> Self {
        PyMesh {
            inner: self.inner.refined(k),
        }
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.level()
    }

    #[getter]
    fn domain(&self) -> String {
        self.inner.domain().to_string()
    }

    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn max_diameter(&self) -> f64 {
        self.inner.max_diameter()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p.x, p.y)).collect()
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner.triangles().iter().map(|t| t.vertices).collect()
    }

    /// Poisson unknowns `2E + T`.
    fn poisson_dofs(&self) -> usize {
        2 * self.inner.num_edges() + self.inner.num_triangles()
    }

    /// Stokes unknowns `4E + 2T + 1`.
    fn stokes_dofs(&self) -> usize {
        4 * self.inner.num_edges() + 2 * self.inner.num_triangles() + 1
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(domain={}, level={}, triangles={}, edges={})",
            self.inner.domain(),
            self.inner.level(),
            self.inner.num_triangles(),
            self.inner.num_edges()
        )
    }
}

fn record_dict<'py>(py: Python<'py>, r: &StudyRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("iter", r.iter)?;
    d.set_item("dofs", r.dofs)?;
    d.set_item("h", r.h)?;
    d.set_item("e_sigma", r.e_sigma)?;
    d.set_item("e_div", r.e_div)?;
    d.set_item("e_jump", r.e_jump)?;
    d.set_item("e_u", r.e_u)?;
    d.set_item("e_p", r.e_p)?;
    d.set_item("e_total", r.e_total)?;
    d.set_item("eoc_sigma", r.eoc_sigma)?;
    d.set_item("eoc_div", r.eoc_div)?;
    d.set_item("eoc_jump", r.eoc_jump)?;
    d.set_item("eoc_u", r.eoc_u)?;
    d.set_item("eoc_p", r.eoc_p)?;
    d.set_item("eoc_total", r.eoc_total)?;
    d.set_item("residual", r.residual)?;
    d.set_item("multiplier", r.multiplier)?;
    d.set_item("trace_integral", r.trace_integral)?;
    d.set_item("rhs_norm", r.rhs_norm)?;
    Ok(d)
}

fn config(case: &str, kmax: usize, nu: Option<Vec<f64>>, solver: &str, quad_err: Option<usize>) -> PyResult<StudyConfig> {
    let tag: CaseTag = case.parse().map_err(to_py)?;
    let mut cfg = StudyConfig::new(tag);
    cfg.kmax = kmax;
    if let Some(nu) = nu {
        cfg.nus = nu;
    }
    cfg.solver.method = solver.parse().map_err(to_py)?;
    cfg.quad_err = quad_err;
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Convergence study; returns one list of per-level dicts for each
/// viscosity (a single list outside the Kovasznay case).
#[pyfunction]
#[pyo3(signature = (case, kmax, nu=None, solver="direct", quad_err=None))]
fn run_study<'py>(
    py: Python<'py>,
    case: &str,
    kmax: usize,
    nu: Option<Vec<f64>>,
    solver: &str,
    quad_err: Option<usize>,
) -> PyResult<Vec<Vec<Bound<'py, PyDict>>>> {
    let cfg = config(case, kmax, nu, solver, quad_err)?;
    let results = py.detach(|| crmixed::run_study(&cfg)).map_err(to_py)?;
    let mut out = Vec::with_capacity(results.len());
    for r in &results {
        if let Some(f) = &r.failure {
            return Err(PyRuntimeError::new_err(format!("{}: {f}", r.stem())));
        }
        out.push(r.records.iter().map(|rec| record_dict(py, rec)).collect::<PyResult<_>>()?);
    }
    Ok(out)
}

/// Solves one case on a mesh and returns the errors together with the CR
/// coefficients of `σ_h` and the cell values of `u_h`.
#[pyfunction]
#[pyo3(signature = (case, mesh, nu=1.0))]
fn solve<'py>(py: Python<'py>, case: &str, mesh: &PyMesh, nu: f64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(case, 1, Some(vec![nu]), "direct", None)?;
    let mc = ManufacturedCase::new(cfg.case, nu).map_err(to_py)?;
    if mc.domain() != mesh.inner.domain() {
        return Err(PyValueError::new_err(format!(
            "case {} lives on {}, mesh is {}",
            cfg.case,
            mc.domain(),
            mesh.inner.domain()
        )));
    }
    let m = &mesh.inner;
    let (sol, rec) = py
        .detach(|| {
            let sol = solve_level(m, &mc, &cfg)?;
            let rec = evaluate_level(m, &mc, &sol, &cfg)?;
            Ok::<_, Error>((sol, rec))
        })
        .map_err(to_py)?;
    let d = record_dict(py, &rec)?;
    d.set_item("iter", m.level())?;
    d.set_item("sigma_h", sol.sigma_h.coeffs.clone())?;
    d.set_item("u_h", sol.u_h.coeffs.clone())?;
    Ok(d)
}

/// `-2 log(e / e_prev) / log(dofs / dofs_prev)`.
#[pyfunction]
fn eoc(e_prev: f64, e: f64, dofs_prev: usize, dofs: usize) -> Option<f64> {
    crmixed::norms::eoc(e_prev, e, dofs_prev, dofs)
}

#[pymodule]
#[pyo3(name = "crmixed")]
fn crmixed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(eoc, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
