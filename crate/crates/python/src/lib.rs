//! Python bindings. Spectra are small wrapper classes, everything else is
//! returned as plain Python data (dicts, lists, floats, `Fraction`s).

use num_rational::BigRational;
use orbit_energy::bounds::{self, BoundContext};
use orbit_energy::montecarlo::{self, Bootstrap};
use orbit_energy::spectral::{self, center_hamiltonian, DEFAULT_NORMALIZATION_TOL};
use orbit_energy::weingarten as wg;
use orbit_energy::{moments, perm_comb, CycleType, Error};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};
use serde::Serialize;

create_exception!(orbit_energy, OrbitEnergyError, PyValueError);
create_exception!(orbit_energy, ConditionError, OrbitEnergyError);
create_exception!(orbit_energy, UnsupportedRegimeError, OrbitEnergyError);
create_exception!(orbit_energy, ResourceCapError, OrbitEnergyError);

fn err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Condition(_) | Error::UndefinedEta | Error::NotDerangement(_) | Error::InvalidInitialEnergy { .. } => {
            ConditionError::new_err(msg)
        }
        Error::UnsupportedRegime { .. } => UnsupportedRegimeError::new_err(msg),
        Error::ResourceCap(_) => ResourceCapError::new_err(msg),
        _ => OrbitEnergyError::new_err(msg),
    }
}

/// Serde value to Python data through `json.loads`.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| OrbitEnergyError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn fraction<'py>(py: Python<'py>, x: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((x.numer().clone(), x.denom().clone()))
}

#[pyclass(name = "HamiltonianSpectrum", frozen)]
struct PyHamiltonian(spectral::HamiltonianSpectrum);

#[pymethods]
impl PyHamiltonian {
    #[new]
    fn new(eigenvalues: Vec<f64>) -> PyResult<Self> {
        spectral::HamiltonianSpectrum::new(eigenvalues).map(Self).map_err(err)
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.eigenvalues().len()
    }

    /// `Tr[H]/d`.
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    /// `eta` of the centered spectrum.
    fn eta(&self) -> PyResult<f64> {
        spectral::eta(&center_hamiltonian(&self.0)).map_err(err)
    }

    fn shifted(&self, e0: f64) -> Self {
        Self(self.0.shifted(e0))
    }

    fn __len__(&self) -> usize {
        self.d()
    }

    fn __repr__(&self) -> String {
        format!("HamiltonianSpectrum({:?})", self.0.eigenvalues())
    }
}

#[pyclass(name = "StateSpectrum", frozen)]
struct PyState(spectral::StateSpectrum);

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (populations, tol = DEFAULT_NORMALIZATION_TOL))]
    fn new(populations: Vec<f64>, tol: f64) -> PyResult<Self> {
        spectral::StateSpectrum::with_tolerance(populations, tol)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn pure(d: usize) -> Self {
        Self(spectral::StateSpectrum::pure(d))
    }

    #[staticmethod]
    fn maximally_mixed(d: usize) -> Self {
        Self(spectral::StateSpectrum::maximally_mixed(d))
    }

    #[getter]
    fn populations(&self) -> Vec<f64> {
        self.0.populations().to_vec()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.populations().len()
    }

    fn is_pure(&self) -> bool {
        self.0.is_pure()
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn __len__(&self) -> usize {
        self.d()
    }

    fn __repr__(&self) -> String {
        format!("StateSpectrum({:?})", self.0.populations())
    }
}

/// A Monte Carlo run. `energies` is copied out on access.
#[pyclass(name = "SampleRun", frozen)]
struct PySampleRun(montecarlo::SampleRun);

#[pymethods]
impl PySampleRun {
    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.0.energies.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn meta<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.meta)
    }

    /// Sample central moments `1..=p_max` with block-bootstrap errors.
    fn moments<'py>(&self, py: Python<'py>, p_max: usize) -> PyResult<Bound<'py, PyAny>> {
        let m = montecarlo::empirical_moments(&self.0, p_max, &Bootstrap::default()).map_err(err)?;
        to_py(py, &m)
    }

    /// `<exp(t (E - mu))>` about the exact mean on the given grid.
    fn mgf<'py>(&self, py: Python<'py>, t_grid: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let pts = montecarlo::empirical_mgf(&self.0, self.0.meta.mu, &t_grid, &Bootstrap::default());
        to_py(py, &pts)
    }

    #[pyo3(signature = (bins = None))]
    fn histogram<'py>(&self, py: Python<'py>, bins: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &montecarlo::histogram(&self.0, bins).map_err(err)?)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| OrbitEnergyError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.0.energies.len()
    }
}

fn cycle_type(parts: Vec<usize>) -> PyResult<CycleType> {
    CycleType::new(parts).map_err(err)
}

/// `{cycle type: Fraction}` for every class of `S_p` at dimension `d`.
#[pyfunction]
fn weingarten_table<'py>(py: Python<'py>, p: usize, d: usize) -> PyResult<Bound<'py, PyDict>> {
    let table = py.detach(|| wg::weingarten_table(p, d)).map_err(err)?;
    let out = PyDict::new(py);
    for (class, value) in table.iter() {
        out.set_item(PyTuple::new(py, class.parts())?, fraction(py, value)?)?;
    }
    Ok(out)
}

#[pyfunction]
fn weingarten<'py>(py: Python<'py>, cycle_type_parts: Vec<usize>, d: usize) -> PyResult<Bound<'py, PyAny>> {
    let class = cycle_type(cycle_type_parts)?;
    let table = py.detach(|| wg::weingarten_table(class.p(), d)).map_err(err)?;
    let value = table.value(&class).expect("every class of S_p is in the table");
    fraction(py, value)
}

/// Conjugacy classes of `S_p` as tuples of cycle lengths.
#[pyfunction]
fn partitions(p: usize) -> PyResult<Vec<Vec<usize>>> {
    Ok(perm_comb::partitions(p)
        .map_err(err)?
        .iter()
        .map(|c| c.parts().to_vec())
        .collect())
}

#[pyfunction]
fn raw_moment(rho: &PyState, h: &PyHamiltonian, p: usize) -> PyResult<f64> {
    moments::raw_moment(&rho.0, &h.0, p).map_err(err)
}

#[pyfunction]
fn central_moment(py: Python<'_>, rho: &PyState, h: &PyHamiltonian, p: usize) -> PyResult<f64> {
    py.detach(|| moments::central_moment(&rho.0, &h.0, p)).map_err(err)
}

#[pyfunction]
fn pure_central_moment(py: Python<'_>, h: &PyHamiltonian, p: usize) -> PyResult<f64> {
    let d = h.0.eigenvalues().len();
    py.detach(|| moments::pure_central_moment(&h.0, d, p)).map_err(err)
}

/// The closed-form variance.
#[pyfunction]
fn variance(rho: &PyState, h: &PyHamiltonian) -> PyResult<f64> {
    moments::variance(&rho.0, &h.0).map_err(err)
}

/// Exact Haar variance with the state centered about `Tr[rho]/d`.
#[pyfunction]
fn centered_variance(rho: &PyState, h: &PyHamiltonian) -> PyResult<f64> {
    moments::centered_variance(&rho.0, &h.0).map_err(err)
}

#[pyfunction]
fn gaussian_moment(p: usize, sigma2: f64) -> f64 {
    moments::gaussian_moment(p, sigma2)
}

#[pyfunction]
#[pyo3(signature = (rho, h, p_max, cap = moments::DEFAULT_P_CAP))]
fn moment_report<'py>(
    py: Python<'py>,
    rho: &PyState,
    h: &PyHamiltonian,
    p_max: usize,
    cap: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = py
        .detach(|| moments::moment_report(&rho.0, &h.0, p_max, cap))
        .map_err(err)?;
    to_py(py, &rep)
}

fn context(rho: &PyState, h: &PyHamiltonian) -> PyResult<BoundContext> {
    BoundContext::from_spectra(&rho.0, &h.0).map_err(err)
}

#[pyfunction]
fn bound_context<'py>(py: Python<'py>, rho: &PyState, h: &PyHamiltonian) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &context(rho, h)?)
}

#[pyfunction]
fn validity_p_max(d: usize) -> usize {
    bounds::validity_p_max(d)
}

#[pyfunction]
fn n_star(d: usize) -> usize {
    bounds::n_star(d)
}

#[pyfunction]
fn f_general(d: usize, p: usize, eta: f64) -> PyResult<f64> {
    bounds::f_general(d, p, eta).map_err(err)
}

#[pyfunction]
fn f_pure(d: usize, p: usize, eta: f64) -> PyResult<f64> {
    bounds::f_pure(d, p, eta).map_err(err)
}

/// Envelope on `|Sigma^(p) - Sigma_G^(p)|`, or `None` outside its validity range.
#[pyfunction]
fn moment_bound(rho: &PyState, h: &PyHamiltonian, p: usize) -> PyResult<Option<f64>> {
    bounds::moment_bound_rhs(p, &context(rho, h)?).map_err(err)
}

#[pyfunction]
fn t_window<'py>(py: Python<'py>, rho: &PyState, h: &PyHamiltonian) -> PyResult<Bound<'py, PyAny>> {
    let w = bounds::t_window(&context(rho, h)?);
    let out = to_py(py, &w)?;
    out.set_item("effective", w.effective())?;
    Ok(out)
}

#[pyfunction]
fn mgf_bound<'py>(py: Python<'py>, rho: &PyState, h: &PyHamiltonian, t: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &bounds::mgf_bound(t, &context(rho, h)?).map_err(err)?)
}

/// `n` interior points of the admissible `t` range.
#[pyfunction]
fn mgf_grid(rho: &PyState, h: &PyHamiltonian, n: usize) -> PyResult<Vec<f64>> {
    Ok(orbit_energy::cli::mgf_grid(&context(rho, h)?, n))
}

#[pyfunction]
#[pyo3(signature = (rho, h, n, seed, workers = 1))]
fn sample_energy(
    py: Python<'_>,
    rho: &PyState,
    h: &PyHamiltonian,
    n: usize,
    seed: u64,
    workers: usize,
) -> PyResult<PySampleRun> {
    py.detach(|| montecarlo::sample_energy(&rho.0, &h.0, n, seed, workers))
        .map(PySampleRun)
        .map_err(err)
}

/// The seven-level example: histogram, Gaussian overlay and summary numbers.
#[pyfunction]
#[pyo3(signature = (seed, n = 100_000, workers = 1))]
fn reproduce_fig1<'py>(py: Python<'py>, seed: u64, n: usize, workers: usize) -> PyResult<Bound<'py, PyAny>> {
    let bundle = py
        .detach(|| montecarlo::reproduce_fig1(seed, n, workers))
        .map_err(err)?;
    to_py(py, &bundle)
}

#[pymodule]
#[pyo3(name = "orbit_energy")]
fn orbit_energy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("OrbitEnergyError", py.get_type::<OrbitEnergyError>())?;
    m.add("ConditionError", py.get_type::<ConditionError>())?;
    m.add("UnsupportedRegimeError", py.get_type::<UnsupportedRegimeError>())?;
    m.add("ResourceCapError", py.get_type::<ResourceCapError>())?;
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PySampleRun>()?;
    m.add_function(wrap_pyfunction!(weingarten_table, m)?)?;
    m.add_function(wrap_pyfunction!(weingarten, m)?)?;
    m.add_function(wrap_pyfunction!(partitions, m)?)?;
    m.add_function(wrap_pyfunction!(raw_moment, m)?)?;
    m.add_function(wrap_pyfunction!(central_moment, m)?)?;
    m.add_function(wrap_pyfunction!(pure_central_moment, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(centered_variance, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_moment, m)?)?;
    m.add_function(wrap_pyfunction!(moment_report, m)?)?;
    m.add_function(wrap_pyfunction!(bound_context, m)?)?;
    m.add_function(wrap_pyfunction!(validity_p_max, m)?)?;
    m.add_function(wrap_pyfunction!(n_star, m)?)?;
    m.add_function(wrap_pyfunction!(f_general, m)?)?;
    m.add_function(wrap_pyfunction!(f_pure, m)?)?;
    m.add_function(wrap_pyfunction!(moment_bound, m)?)?;
    m.add_function(wrap_pyfunction!(t_window, m)?)?;
    m.add_function(wrap_pyfunction!(mgf_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mgf_grid, m)?)?;
    m.add_function(wrap_pyfunction!(sample_energy, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_fig1, m)?)?;
    Ok(())
}
