//! Python module `pyklshell`: materials, NURBS surfaces, benchmark solves and convergence sweeps.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use klshell::benchmarks::{self, BenchmarkCase, BenchmarkId};
use klshell::discretization::{gauss_rule, ElementKind};
use klshell::nurbs::{Direction, KnotVector, NurbsSurface};
use klshell::postprocess::SolutionField;
use klshell::shell::{frame_at, ShellMaterial};
use klshell::ShellError;

fn to_py(e: ShellError) -> PyErr {
    match e {
        ShellError::Domain { .. }
        | ShellError::Unsupported(_)
        | ShellError::InvalidKnots(_)
        | ShellError::InvalidSurface(_)
        | ShellError::InvalidMaterial(_)
        | ShellError::InvalidConstraint(_)
        | ShellError::Parse { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn arr<V: std::ops::Index<usize, Output = f64>>(v: &V) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn parse_kind(s: &str) -> PyResult<ElementKind> {
    s.parse().map_err(to_py)
}

/// Isotropic shell material.
#[pyclass(name = "Material", frozen, from_py_object)]
#[derive(Clone)]
struct PyMaterial(ShellMaterial);

#[pymethods]
impl PyMaterial {
    #[new]
    fn new(young: f64, poisson: f64, thickness: f64) -> PyResult<Self> {
        ShellMaterial::new(young, poisson, thickness).map(Self).map_err(to_py)
    }
    #[getter]
    fn young(&self) -> f64 {
        self.0.young
    }
    #[getter]
    fn poisson(&self) -> f64 {
        self.0.poisson
    }
    #[getter]
    fn thickness(&self) -> f64 {
        self.0.thickness
    }
    fn membrane_rigidity(&self) -> f64 {
        self.0.membrane_rigidity()
    }
    fn bending_rigidity(&self) -> f64 {
        self.0.bending_rigidity()
    }
    fn __repr__(&self) -> String {
        format!("Material(young={}, poisson={}, thickness={})", self.0.young, self.0.poisson, self.0.thickness)
    }
}

/// Rational tensor-product surface; control points are `(x, y, z, w)` with the first index fastest.
#[pyclass(name = "Surface", frozen, from_py_object)]
#[derive(Clone)]
struct PySurface(NurbsSurface);

fn direction(d: &str) -> PyResult<Direction> {
    match d {
        "u" => Ok(Direction::U),
        "v" => Ok(Direction::V),
        _ => Err(PyValueError::new_err(format!("direction must be 'u' or 'v', got '{d}'"))),
    }
}

#[pymethods]
impl PySurface {
    #[new]
    fn new(
        degree_u: usize,
        degree_v: usize,
        knots_u: Vec<f64>,
        knots_v: Vec<f64>,
        control: Vec<[f64; 4]>,
    ) -> PyResult<Self> {
        let ku = KnotVector::new(knots_u, degree_u).map_err(to_py)?;
        let kv = KnotVector::new(knots_v, degree_v).map_err(to_py)?;
        NurbsSurface::new(ku, kv, control).map(Self).map_err(to_py)
    }
    #[getter]
    fn degrees(&self) -> (usize, usize) {
        self.0.degrees()
    }
    #[getter]
    fn grid(&self) -> (usize, usize) {
        self.0.grid()
    }
    #[getter]
    fn control_points(&self) -> Vec<[f64; 4]> {
        self.0.control_points().to_vec()
    }
    fn knots(&self, direction_name: &str) -> PyResult<Vec<f64>> {
        Ok(self.0.knots(direction(direction_name)?).knots().to_vec())
    }
    fn point(&self, t1: f64, t2: f64) -> PyResult<[f64; 3]> {
        self.0.eval(t1, t2, 0).map(|p| arr(&p.r)).map_err(to_py)
    }
    /// Covariant tangents, unit normal and area element at a parametric point.
    fn frame<'py>(&self, py: Python<'py>, t1: f64, t2: f64) -> PyResult<Bound<'py, PyDict>> {
        let f = frame_at(&self.0, t1, t2).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("a1", arr(&f.a1))?;
        d.set_item("a2", arr(&f.a2))?;
        d.set_item("a3", arr(&f.a3))?;
        d.set_item("jacobian", f.jac)?;
        Ok(d)
    }
    /// Uniform refinement: each element split in two, `times` times.
    fn refine(&self, direction_name: &str, times: usize) -> PyResult<Self> {
        self.0.refine_uniform(direction(direction_name)?, times).map(Self).map_err(to_py)
    }
}

/// Solved displacement field of one benchmark run.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    field: SolutionField,
    #[pyo3(get)]
    deflection: f64,
    #[pyo3(get)]
    dofs: usize,
    #[pyo3(get)]
    free_dofs: usize,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    mesh: (usize, usize),
}

#[pymethods]
impl PySolution {
    fn displacement(&self, t1: f64, t2: f64) -> PyResult<[f64; 3]> {
        let u = self.field.displacement_at(t1, t2).map_err(to_py)?;
        Ok(arr(&u))
    }
    /// Local Cartesian stress resultants `(s11, s22, s12)` for `n`, `m` and `n_eff`.
    fn resultants<'py>(&self, py: Python<'py>, t1: f64, t2: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = self.field.resultants_at(t1, t2).map_err(to_py)?;
        let d = PyDict::new(py);
        for (k, t) in [("n", r.n), ("m", r.m), ("n_eff", r.n_eff)] {
            d.set_item(k, (t.s11, t.s22, t.s12))?;
        }
        Ok(d)
    }
    #[pyo3(signature = (quad=3))]
    fn energies<'py>(&self, py: Python<'py>, quad: usize) -> PyResult<Bound<'py, PyDict>> {
        let rule = gauss_rule(quad).map_err(to_py)?;
        let e = self.field.energies(&rule).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("membrane", e.membrane)?;
        d.set_item("bending", e.bending)?;
        d.set_item("total", e.total)?;
        Ok(d)
    }
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.field.coefficients().to_vec()
    }
}

/// One of the four standard benchmark problems at a given slenderness.
#[pyclass(name = "Benchmark", frozen)]
struct PyBenchmark(BenchmarkCase);

#[pymethods]
impl PyBenchmark {
    #[new]
    #[pyo3(signature = (name, slenderness=None))]
    fn new(name: &str, slenderness: Option<f64>) -> PyResult<Self> {
        let id: BenchmarkId = name.parse().map_err(to_py)?;
        let s = slenderness.unwrap_or(id.standard_slenderness()[0]);
        benchmarks::make_case(id, s).map(Self).map_err(to_py)
    }
    #[staticmethod]
    fn names() -> Vec<&'static str> {
        BenchmarkId::ALL.iter().map(|b| b.name()).collect()
    }
    #[getter]
    fn name(&self) -> &'static str {
        self.0.id.name()
    }
    #[getter]
    fn slenderness(&self) -> f64 {
        self.0.slenderness
    }
    #[getter]
    fn reference(&self) -> Option<f64> {
        self.0.reference
    }
    #[getter]
    fn material(&self) -> PyMaterial {
        PyMaterial(self.0.material)
    }
    #[getter]
    fn geometry(&self) -> PySurface {
        PySurface(self.0.geometry.clone())
    }
    fn mesh_for_level(&self, level: usize) -> (usize, usize) {
        self.0.mesh_for_level(level)
    }
    fn mesh_for_elements(&self, n: usize) -> (usize, usize) {
        self.0.mesh_for_elements(n)
    }
    /// Solve on the mesh given by `elements` along the first direction, or by refinement `level`.
    #[pyo3(signature = (elements=None, level=None, element="cas", quad=3))]
    fn solve(
        &self,
        py: Python<'_>,
        elements: Option<usize>,
        level: Option<usize>,
        element: &str,
        quad: usize,
    ) -> PyResult<PySolution> {
        let mesh = match (elements, level) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give either elements or level, not both")),
            (Some(0), None) => return Err(PyValueError::new_err("elements must be positive")),
            (Some(n), None) => self.0.mesh_for_elements(n),
            (None, l) => self.0.mesh_for_level(l.unwrap_or(0)),
        };
        let kind = parse_kind(element)?;
        let a = py.detach(|| self.0.solve(mesh, kind, quad)).map_err(to_py)?;
        Ok(PySolution {
            deflection: a.deflection,
            dofs: a.dofs,
            free_dofs: a.free_dofs,
            residual: a.rel_residual,
            mesh,
            field: a.field,
        })
    }
    /// Rows of a convergence study as dictionaries.
    #[pyo3(signature = (levels, element="cas", quad=3))]
    fn run_convergence<'py>(
        &self,
        py: Python<'py>,
        levels: usize,
        element: &str,
        quad: usize,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let kind = parse_kind(element)?;
        let report = py
            .detach(|| benchmarks::run_convergence(&self.0, kind, quad, levels))
            .map_err(to_py)?;
        report
            .levels
            .iter()
            .map(|l| {
                let d = PyDict::new(py);
                d.set_item("level", l.level)?;
                d.set_item("mesh", l.mesh)?;
                d.set_item("dofs", l.dofs)?;
                d.set_item("deflection", l.deflection)?;
                d.set_item("normalized", l.normalized)?;
                d.set_item("error_n11", l.error_n11)?;
                d.set_item("error_m11", l.error_m11)?;
                d.set_item("energy_membrane", l.energy.membrane)?;
                d.set_item("energy_bending", l.energy.bending)?;
                d.set_item("residual", l.rel_residual)?;
                Ok(d)
            })
            .collect()
    }
    fn __repr__(&self) -> String {
        format!("Benchmark('{}', slenderness={})", self.0.id, self.0.slenderness)
    }
}

#[pymodule]
fn pyklshell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaterial>()?;
    m.add_class::<PySurface>()?;
    m.add_class::<PyBenchmark>()?;
    m.add_class::<PySolution>()?;
    Ok(())
}
