//! Python bindings: the arm model, grid sweep, coevolution and the table controller.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use serpentik::arm_model::DOF_NAMES;
use serpentik::rng::sweep_stream;
use serpentik::{CoevoMethod, CoevoParams, DofVector, Neighborhood, Point, SweepOrder, INCH, NUM_DOFS};

create_exception!(serpentik, SerpentikError, PyException);

fn err(e: serpentik::Error) -> PyErr {
    SerpentikError::new_err(e.to_string())
}

fn dofs(values: Vec<f64>) -> PyResult<DofVector> {
    let arr: [f64; NUM_DOFS] = values
        .try_into()
        .map_err(|v: Vec<f64>| SerpentikError::new_err(format!("expected {NUM_DOFS} values, got {}", v.len())))?;
    Ok(DofVector::new(arr))
}

fn xyz(p: &Point) -> (f64, f64, f64) {
    (p.x, p.y, p.z)
}

fn parse<T: std::str::FromStr<Err = serpentik::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn sweep_order(s: &str) -> PyResult<SweepOrder> {
    match s {
        "serpentine" => Ok(SweepOrder::Serpentine),
        "reverse_serpentine" => Ok(SweepOrder::ReverseSerpentine),
        other => Err(SerpentikError::new_err(format!(
            "unknown order {other:?} (serpentine | reverse_serpentine)"
        ))),
    }
}

#[pyclass(module = "serpentik", name = "ArmModel", skip_from_py_object)]
#[derive(Clone)]
struct PyArmModel(serpentik::ArmModel);

#[pymethods]
impl PyArmModel {
    /// Default geometry, or the `[arm]` section of a TOML config file.
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<std::path::PathBuf>) -> PyResult<Self> {
        match config {
            Some(path) => Ok(PyArmModel(serpentik::ProjectConfig::load(path).map_err(err)?.arm)),
            None => Ok(PyArmModel(serpentik::ArmModel::default())),
        }
    }

    /// Joint positions from the base to the gripper tip, feet.
    fn forward_kinematics(&self, q: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
        let pose = self.0.forward_kinematics(&dofs(q)?).map_err(err)?;
        Ok(pose.points.iter().map(xyz).collect())
    }

    fn end_effector(&self, q: Vec<f64>) -> PyResult<(f64, f64, f64)> {
        Ok(xyz(&self.0.end_effector(&dofs(q)?).map_err(err)?))
    }

    fn clamp(&self, q: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.0.clamp(&dofs(q)?).iter().collect())
    }

    fn within_limits(&self, q: Vec<f64>) -> PyResult<bool> {
        Ok(self.0.limits.contains(&dofs(q)?))
    }

    #[getter]
    fn limits(&self) -> Vec<(f64, f64)> {
        self.0.limits.ranges().to_vec()
    }

    #[getter]
    fn max_reach(&self) -> f64 {
        self.0.max_reach()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }

    #[staticmethod]
    fn dof_names() -> Vec<&'static str> {
        DOF_NAMES.to_vec()
    }
}

#[pyclass(module = "serpentik", name = "GridSpec", skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGridSpec(serpentik::GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (nr=None, nz=None, r0=None, z0=None, dr=None, dz=None))]
    fn new(
        nr: Option<usize>,
        nz: Option<usize>,
        r0: Option<f64>,
        z0: Option<f64>,
        dr: Option<f64>,
        dz: Option<f64>,
    ) -> PyResult<Self> {
        let d = serpentik::GridSpec::default();
        let spec = serpentik::GridSpec {
            nr: nr.unwrap_or(d.nr),
            nz: nz.unwrap_or(d.nz),
            r0: r0.unwrap_or(d.r0),
            z0: z0.unwrap_or(d.z0),
            dr: dr.unwrap_or(d.dr),
            dz: dz.unwrap_or(d.dz),
        };
        spec.validate().map_err(err)?;
        Ok(PyGridSpec(spec))
    }

    #[getter]
    fn nr(&self) -> usize {
        self.0.nr
    }

    #[getter]
    fn nz(&self) -> usize {
        self.0.nz
    }

    /// `(r, z)` of node `(i, j)`, feet.
    fn position(&self, i: usize, j: usize) -> PyResult<(f64, f64)> {
        self.0.position(i, j).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        let s = &self.0;
        format!("GridSpec(nr={}, nz={}, r0={}, z0={}, dr={}, dz={})", s.nr, s.nz, s.r0, s.z0, s.dr, s.dz)
    }
}

#[pyclass(module = "serpentik", name = "EsParams", skip_from_py_object)]
#[derive(Clone)]
struct PyEsParams(serpentik::EsParams);

#[pymethods]
impl PyEsParams {
    #[new]
    #[pyo3(signature = (seed=0, sigma_init=None, decay=None, tolerance_inches=None, max_evals=None))]
    fn new(
        seed: u64,
        sigma_init: Option<f64>,
        decay: Option<f64>,
        tolerance_inches: Option<f64>,
        max_evals: Option<u64>,
    ) -> PyResult<Self> {
        let mut es = serpentik::EsParams { seed, ..Default::default() };
        if let Some(v) = sigma_init {
            es.sigma_init = [v; NUM_DOFS];
        }
        if let Some(v) = decay {
            es.decay = [v; NUM_DOFS];
        }
        if let Some(v) = tolerance_inches {
            es.tolerance = v * INCH;
        }
        if let Some(v) = max_evals {
            es.max_evals = v;
        }
        es.validate().map_err(err)?;
        Ok(PyEsParams(es))
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    /// Feet.
    #[getter]
    fn tolerance(&self) -> f64 {
        self.0.tolerance
    }
}

#[pyclass(module = "serpentik", name = "ConfigTable", skip_from_py_object)]
#[derive(Clone)]
struct PyTable(serpentik::ConfigTable);

#[pymethods]
impl PyTable {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyTable(serpentik::load_table(path).map_err(err)?))
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        serpentik::save_table(&self.0, path).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyTable(serpentik::ConfigTable::from_json(text).map_err(err)?))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(self.0.spec)
    }

    fn entry(&self, i: usize, j: usize) -> PyResult<Vec<f64>> {
        Ok(self.0.entry(i, j).map_err(err)?.iter().collect())
    }

    /// Feet.
    fn residual(&self, i: usize, j: usize) -> PyResult<f64> {
        self.0.residual_at(i, j).map_err(err)
    }

    fn is_converged(&self, i: usize, j: usize) -> PyResult<bool> {
        self.0.is_converged(i, j).map_err(err)
    }

    fn converged_count(&self) -> usize {
        self.0.converged_count()
    }

    fn __len__(&self) -> usize {
        self.0.spec.len()
    }

    fn __eq__(&self, other: PyRef<'_, PyTable>) -> bool {
        self.0 == other.0
    }
}

fn es_or_default(es: Option<PyRef<'_, PyEsParams>>) -> serpentik::EsParams {
    es.map(|e| e.0.clone()).unwrap_or_default()
}

/// Solves one `(r, z)` target. Returns a dict with `config`, `residual` (feet),
/// `evals` and `converged`.
#[pyfunction]
#[pyo3(signature = (model, r, z, es=None, init=None, stream=0))]
fn solve_point<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyArmModel>,
    r: f64,
    z: f64,
    es: Option<PyRef<'_, PyEsParams>>,
    init: Option<Vec<f64>>,
    stream: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let params = es_or_default(es);
    let init = init.map(dofs).transpose()?.unwrap_or(DofVector::ZERO);
    let mut rng = sweep_stream(params.seed, stream);
    let res = serpentik::solve_point(&model.0, (r, z), &init, &params, &mut rng).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("config", res.config.iter().collect::<Vec<_>>())?;
    d.set_item("residual", res.residual)?;
    d.set_item("evals", res.evals)?;
    d.set_item("converged", res.converged)?;
    Ok(d)
}

/// Solves every grid node and returns the table.
#[pyfunction]
#[pyo3(signature = (model, grid, es=None, order="serpentine", warm_start=true))]
fn sweep(
    py: Python<'_>,
    model: PyRef<'_, PyArmModel>,
    grid: PyRef<'_, PyGridSpec>,
    es: Option<PyRef<'_, PyEsParams>>,
    order: &str,
    warm_start: bool,
) -> PyResult<PyTable> {
    let (model, spec, params, order) = (model.0.clone(), grid.0, es_or_default(es), sweep_order(order)?);
    let table = py
        .detach(|| serpentik::sweep_grid(&model, &spec, &params, order, warm_start))
        .map_err(err)?;
    Ok(PyTable(table))
}

/// Smooths a table. Returns `(table, history)` with one dict per pass.
#[pyfunction]
#[pyo3(signature = (table, model, method="alternating", neighborhood="von_neumann", passes=6, relax_inches=None, evals_per_point=2000, es=None))]
#[allow(clippy::too_many_arguments)]
fn coevolve<'py>(
    py: Python<'py>,
    table: PyRef<'_, PyTable>,
    model: PyRef<'_, PyArmModel>,
    method: &str,
    neighborhood: &str,
    passes: usize,
    relax_inches: Option<f64>,
    evals_per_point: u64,
    es: Option<PyRef<'_, PyEsParams>>,
) -> PyResult<(PyTable, Vec<Bound<'py, PyDict>>)> {
    let es = es_or_default(es);
    let params = CoevoParams {
        method: parse::<CoevoMethod>(method)?,
        neighborhood: parse::<Neighborhood>(neighborhood)?,
        passes,
        relax_bound: relax_inches.map_or(es.tolerance, |v| v * INCH),
        evals_per_point,
        es,
    };
    let (input, model) = (table.0.clone(), model.0.clone());
    let (out, history) = py
        .detach(|| serpentik::coevolve(&input, &model, &params))
        .map_err(err)?;
    let rows = history
        .passes
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("pass", p.pass)?;
            d.set_item("objective", &p.objective)?;
            d.set_item("total_penalty", p.total_penalty)?;
            d.set_item("mean_penalty", p.mean_penalty)?;
            d.set_item("mean_residual", p.mean_residual)?;
            d.set_item("max_residual", p.max_residual)?;
            d.set_item("converged", p.converged)?;
            d.set_item("points_updated", p.points_updated)?;
            d.set_item("points_given_up", p.points_given_up)?;
            d.set_item("evals", p.evals)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((PyTable(out), rows))
}

/// Sum of configuration distances from `(i, j)` to its neighbors, degrees.
#[pyfunction]
#[pyo3(signature = (table, i, j, neighborhood="von_neumann"))]
fn penalty(table: PyRef<'_, PyTable>, i: usize, j: usize, neighborhood: &str) -> PyResult<f64> {
    serpentik::penalty(&table.0, i, j, parse(neighborhood)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (table, neighborhood="von_neumann"))]
fn total_penalty(table: PyRef<'_, PyTable>, neighborhood: &str) -> PyResult<f64> {
    Ok(serpentik::total_penalty(&table.0, parse(neighborhood)?))
}

#[pyfunction]
#[pyo3(signature = (table, neighborhood="von_neumann"))]
fn smoothness_report<'py>(
    py: Python<'py>,
    table: PyRef<'_, PyTable>,
    neighborhood: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let r = serpentik::smoothness_report(&table.0, parse(neighborhood)?);
    let d = PyDict::new(py);
    d.set_item("max_neighbor_distance", r.max_neighbor_distance)?;
    d.set_item("mean_neighbor_distance", r.mean_neighbor_distance)?;
    d.set_item("total_penalty", r.total_penalty)?;
    d.set_item("mean_penalty", r.mean_penalty)?;
    d.set_item("residual_histogram", r.residual_histogram)?;
    d.set_item("unconverged", r.unconverged)?;
    d.set_item("max_converged_residual", r.max_converged_residual)?;
    d.set_item("mean_converged_residual", r.mean_converged_residual)?;
    Ok(d)
}

/// Bilinear blend of the table at `(r, z)` with the mast at zero.
#[pyfunction]
fn interpolate(table: PyRef<'_, PyTable>, model: PyRef<'_, PyArmModel>, r: f64, z: f64) -> PyResult<Vec<f64>> {
    Ok(serpentik::interpolate(&table.0, &model.0, r, z).map_err(err)?.iter().collect())
}

/// Configuration for a 3-D target in feet.
#[pyfunction]
fn ik_lookup(table: PyRef<'_, PyTable>, model: PyRef<'_, PyArmModel>, x: f64, y: f64, z: f64) -> PyResult<Vec<f64>> {
    Ok(serpentik::ik_lookup(&table.0, &model.0, &Point::new(x, y, z))
        .map_err(err)?
        .iter()
        .collect())
}

/// Samples the polyline through `waypoints`. Returns one dict per sample.
#[pyfunction]
#[pyo3(signature = (table, model, waypoints, max_joint_rate, step=0.25))]
fn plan_trajectory<'py>(
    py: Python<'py>,
    table: PyRef<'_, PyTable>,
    model: PyRef<'_, PyArmModel>,
    waypoints: Vec<(f64, f64, f64)>,
    max_joint_rate: f64,
    step: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let points: Vec<Point> = waypoints.into_iter().map(|(x, y, z)| Point::new(x, y, z)).collect();
    let plan = serpentik::plan_trajectory(&table.0, &model.0, &points, step, max_joint_rate).map_err(err)?;
    plan.samples
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("target", xyz(&s.target))?;
            d.set_item("dofs", s.dofs.iter().collect::<Vec<_>>())?;
            d.set_item("achieved", xyz(&s.achieved))?;
            d.set_item("deviation", s.deviation)?;
            d.set_item("max_delta", s.max_delta)?;
            d.set_item("rate_exceeded", s.rate_exceeded)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "serpentik")]
fn serpentik_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SerpentikError", m.py().get_type::<SerpentikError>())?;
    m.add("INCH", INCH)?;
    m.add_class::<PyArmModel>()?;
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyEsParams>()?;
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(solve_point, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(coevolve, m)?)?;
    m.add_function(wrap_pyfunction!(penalty, m)?)?;
    m.add_function(wrap_pyfunction!(total_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(smoothness_report, m)?)?;
    m.add_function(wrap_pyfunction!(interpolate, m)?)?;
    m.add_function(wrap_pyfunction!(ik_lookup, m)?)?;
    m.add_function(wrap_pyfunction!(plan_trajectory, m)?)?;
    Ok(())
}
