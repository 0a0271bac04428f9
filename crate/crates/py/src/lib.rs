//! Python bindings: grids and fields, the example potentials, dataset
//! generation and storage, and both recovery algorithms.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use scatlab::forward::{generate_dataset_with, read_dataset, write_dataset, GenerateConfig, ScatteringDataSet, SolverConfig};
use scatlab::grid::{Field, GridSpec, Space};
use scatlab::inversion::{bcr_recover, RecoveryParams, RecoveryTrace};
use scatlab::resolvent::DEFAULT_TRUNCATION;
use scatlab::scene::{make_cutoff, rasterize, PotentialSpec, DEFAULT_CUTOFF_INNER, DEFAULT_CUTOFF_OUTER};
use scatlab::{inversion, lab, resolvent, specfun, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Missing(_) => PyIOError::new_err(e.to_string()),
        Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_space(space: &str) -> PyResult<Space> {
    match space {
        "physical" => Ok(Space::Physical),
        "frequency" => Ok(Space::Frequency),
        other => Err(PyValueError::new_err(format!("space must be 'physical' or 'frequency', got {other:?}"))),
    }
}

#[pyclass(name = "GridSpec", module = "scatlab", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGridSpec(GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (n, half_width = 2.1))]
    fn new(n: usize, half_width: f64) -> PyResult<Self> {
        GridSpec::new(n, half_width).map(Self).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    #[getter]
    fn nyquist(&self) -> f64 {
        self.0.nyquist()
    }

    fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let p = self.0.point(i, j);
        (p[0], p[1])
    }

    fn freq(&self, i: usize, j: usize) -> (f64, f64) {
        let f = self.0.freq(i, j);
        (f[0], f[1])
    }

    fn __repr__(&self) -> String {
        format!("GridSpec(n={}, half_width={})", self.0.n(), self.0.half_width())
    }
}

#[pyclass(name = "Field", module = "scatlab", frozen, from_py_object)]
#[derive(Clone)]
struct PyField(Field);

#[pymethods]
impl PyField {
    /// Row-major values `(i, j) -> i * n + j`.
    #[staticmethod]
    #[pyo3(signature = (spec, values, space = "physical"))]
    fn from_values(spec: PyGridSpec, values: Vec<Complex64>, space: &str) -> PyResult<Self> {
        Field::new(spec.0, parse_space(space)?, values).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (spec, space = "physical"))]
    fn zeros(spec: PyGridSpec, space: &str) -> PyResult<Self> {
        Ok(Self(Field::zeros(spec.0, parse_space(space)?)))
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        Field::read_csv(path).map(Self).map_err(py_err)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.0.write_csv(path).map_err(py_err)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(*self.0.spec())
    }

    #[getter]
    fn space(&self) -> &'static str {
        match self.0.space() {
            Space::Physical => "physical",
            Space::Frequency => "frequency",
        }
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.data().to_vec()
    }

    fn real(&self) -> Vec<f64> {
        self.0.data().iter().map(|z| z.re).collect()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<Complex64> {
        let n = self.0.spec().n();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) outside an {n}x{n} grid")));
        }
        Ok(self.0.get(i, j))
    }

    fn to_freq(&self) -> PyResult<Self> {
        self.0.to_freq().map(Self).map_err(py_err)
    }

    fn to_phys(&self) -> PyResult<Self> {
        self.0.to_phys().map(Self).map_err(py_err)
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    fn __len__(&self) -> usize {
        self.0.data().len()
    }

    fn __repr__(&self) -> String {
        format!("Field(n={}, space={})", self.0.spec().n(), self.space())
    }
}

#[pyclass(name = "Potential", module = "scatlab", frozen, from_py_object)]
#[derive(Clone)]
struct PyPotential(PotentialSpec);

#[pymethods]
impl PyPotential {
    #[staticmethod]
    #[pyo3(signature = (number, amplitude = 1.0))]
    fn example(number: u32, amplitude: f64) -> PyResult<Self> {
        let p = PotentialSpec::example(number).map_err(py_err)?;
        Ok(Self(if amplitude == 1.0 { p } else { p.scaled(amplitude) }))
    }

    /// Potential given by its samples on a grid.
    #[staticmethod]
    fn raster(field: PyField) -> Self {
        Self(PotentialSpec::Raster(field.0))
    }

    fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.0.eval([x1, x2])
    }

    fn rasterize(&self, spec: PyGridSpec) -> PyField {
        PyField(rasterize(&self.0, &spec.0))
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id()
    }

    fn __repr__(&self) -> String {
        format!("Potential({})", self.0.id())
    }
}

#[pyclass(name = "Dataset", module = "scatlab", frozen)]
struct PyDataset(ScatteringDataSet);

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        read_dataset(path).map(Self).map_err(py_err)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        write_dataset(&self.0, path).map_err(py_err)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(self.0.inverse_spec)
    }

    #[getter]
    fn theta0(&self) -> (f64, f64) {
        (self.0.theta0[0], self.0.theta0[1])
    }

    #[getter]
    fn k_max(&self) -> f64 {
        self.0.k_max
    }

    #[getter]
    fn potential_id(&self) -> String {
        self.0.potential_id.clone()
    }

    #[getter]
    fn omitted_fraction(&self) -> f64 {
        self.0.omitted_fraction()
    }

    /// `(i, j, k, (theta1, theta2), sign, u_inf)` per record.
    fn records(&self) -> Vec<(usize, usize, f64, (f64, f64), i8, Complex64)> {
        self.0
            .records
            .iter()
            .map(|r| (r.i, r.j, r.k, (r.theta[0], r.theta[1]), r.sign, r.u_inf))
            .collect()
    }

    fn manifest_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0.manifest()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.0.records.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({}, n={}, records={}, omitted={})",
            self.0.potential_id,
            self.0.inverse_spec.n(),
            self.0.records.len(),
            self.0.omitted.len()
        )
    }
}

#[pyclass(name = "Trace", module = "scatlab", frozen)]
struct PyTrace(RecoveryTrace);

#[pymethods]
impl PyTrace {
    #[getter]
    fn iterates(&self) -> Vec<PyField> {
        self.0.iterates.iter().cloned().map(PyField).collect()
    }

    #[getter]
    fn last(&self) -> Option<PyField> {
        self.0.last().cloned().map(PyField)
    }

    #[getter]
    fn cauchy_norms(&self) -> Vec<f64> {
        self.0.cauchy_norms.clone()
    }

    #[getter]
    fn imag_norms(&self) -> Vec<f64> {
        self.0.imag_norms.clone()
    }

    #[getter]
    fn step_seconds(&self) -> Vec<f64> {
        self.0.step_seconds.clone()
    }

    #[getter]
    fn mean_step_seconds(&self) -> f64 {
        self.0.mean_step_seconds()
    }

    #[getter]
    fn solver_failures(&self) -> Vec<usize> {
        self.0.solver_failures.clone()
    }

    fn __len__(&self) -> usize {
        self.0.iterates.len()
    }
}

#[pyfunction]
#[pyo3(signature = (potential, n, theta0 = (0.0, 1.0), fine = 2, kmax = None, tol = 1e-8, forward_k = None, half_width = 2.1))]
#[allow(clippy::too_many_arguments)]
fn generate_dataset(
    py: Python<'_>,
    potential: PyPotential,
    n: usize,
    theta0: (f64, f64),
    fine: usize,
    kmax: Option<f64>,
    tol: f64,
    forward_k: Option<f64>,
    half_width: f64,
) -> PyResult<PyDataset> {
    let spec = GridSpec::new(n, half_width).map_err(py_err)?;
    let cfg = GenerateConfig {
        theta0: [theta0.0, theta0.1],
        fine_factor: fine,
        k_max: kmax,
        forward_k,
        solver: SolverConfig::with_tol(tol),
        ..GenerateConfig::default()
    };
    py.detach(|| generate_dataset_with(&potential.0, &spec, &cfg))
        .map(PyDataset)
        .map_err(py_err)
}

/// Runs `"new"` (Born-series fixed point, `m` terms, `l` iterates) or
/// `"bcr"` (`l` iterates of the forward-solve baseline).
#[pyfunction]
#[pyo3(signature = (dataset, m, l, algorithm = "new", stop_tol = 0.0, tol = 1e-8, cutoff_inner = DEFAULT_CUTOFF_INNER, cutoff_outer = DEFAULT_CUTOFF_OUTER))]
#[allow(clippy::too_many_arguments)]
fn recover(
    py: Python<'_>,
    dataset: &PyDataset,
    m: usize,
    l: usize,
    algorithm: &str,
    stop_tol: f64,
    tol: f64,
    cutoff_inner: f64,
    cutoff_outer: f64,
) -> PyResult<PyTrace> {
    let d = &dataset.0;
    let cutoff = make_cutoff(&d.inverse_spec, cutoff_inner, cutoff_outer).map_err(py_err)?;
    let trace = match algorithm {
        "new" => {
            let mut params = RecoveryParams::new(m, l, cutoff);
            params.stop_tol = stop_tol;
            py.detach(|| inversion::recover(d, &params))
        }
        "bcr" => {
            let params = inversion::BcrParams::new(l, tol, cutoff);
            py.detach(|| bcr_recover(d, &params))
        }
        other => return Err(PyValueError::new_err(format!("algorithm must be 'new' or 'bcr', got {other:?}"))),
    };
    trace.map(PyTrace).map_err(py_err)
}

#[pyfunction]
fn born_from_data(dataset: &PyDataset) -> PyResult<PyField> {
    inversion::born_from_data(&dataset.0).map(PyField).map_err(py_err)
}

/// Discrete L2 distance between the real part of `field` and `potential` on the field's grid.
#[pyfunction]
fn l2_error(field: &PyField, potential: &PyPotential) -> f64 {
    lab::l2_error(&field.0, &potential.0)
}

/// `(k, (theta1, theta2), sign)` with `xi = k (theta - sign theta0)`.
#[pyfunction]
#[pyo3(signature = (xi, theta0 = (0.0, 1.0), eps_deg = 1e-9))]
fn ewald_map(xi: (f64, f64), theta0: (f64, f64), eps_deg: f64) -> PyResult<(f64, (f64, f64), i8)> {
    let e = inversion::ewald_map([xi.0, xi.1], [theta0.0, theta0.1], eps_deg).map_err(py_err)?;
    Ok((e.k, (e.theta[0], e.theta[1]), e.sign))
}

/// Fourier multiplier of the truncated outgoing resolvent at `|xi| = s`.
#[pyfunction]
#[pyo3(signature = (s, k, rho = DEFAULT_TRUNCATION))]
fn resolvent_symbol(s: f64, k: f64, rho: f64) -> Complex64 {
    resolvent::symbol_value(s, k, rho)
}

#[pyfunction]
fn bessel_j(order: u32, x: f64) -> PyResult<f64> {
    specfun::bessel_j(order, x).map_err(py_err)
}

#[pyfunction]
fn bessel_y(order: u32, x: f64) -> PyResult<f64> {
    specfun::bessel_y(order, x).map_err(py_err)
}

#[pyfunction]
fn hankel1(order: u32, x: f64) -> PyResult<Complex64> {
    specfun::hankel1(order, x).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "scatlab")]
fn scatlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(born_from_data, m)?)?;
    m.add_function(wrap_pyfunction!(l2_error, m)?)?;
    m.add_function(wrap_pyfunction!(ewald_map, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_y, m)?)?;
    m.add_function(wrap_pyfunction!(hankel1, m)?)?;
    Ok(())
}
