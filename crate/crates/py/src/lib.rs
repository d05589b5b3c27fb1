//! Python bindings: lattices, wave systems, RPA fields, direct integration, kinetic rates,
//! steady one-mode PDFs, configured experiments and the acceptance checks.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use wavestat::config::validate_config as parse_config;
use wavestat::dynamics::{integrate as integrate_field, IntegrateOptions, InteractionModel};
use wavestat::experiment::{run_experiment as run, RunOptions};
use wavestat::kinetics::{Broadening, KineticModel};
use wavestat::onemode::{self, SteadyPdf};
use wavestat::statistics::{generate_rpa_field, AmplitudeLaw};
use wavestat::{verify as checks, FourierLattice, WaveField, WaveSystem, WtError};

fn err(e: WtError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, name = "Lattice")]
struct Lattice {
    inner: Arc<FourierLattice>,
}

#[pymethods]
impl Lattice {
    #[new]
    #[pyo3(signature = (dim, n_side, box_length = 2.0 * PI))]
    fn new(dim: usize, n_side: usize, box_length: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(FourierLattice::new(dim, n_side, box_length).map_err(err)?),
        })
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn zero_mode(&self) -> usize {
        self.inner.zero_mode()
    }

    fn wavevectors(&self) -> Vec<[f64; 3]> {
        self.inner.wavevectors()
    }

    fn __repr__(&self) -> String {
        format!(
            "Lattice(dim={}, n_side={}, box_length={})",
            self.inner.dim(),
            self.inner.n_side(),
            self.inner.box_length()
        )
    }
}

#[pyclass(frozen, name = "System")]
struct System {
    inner: WaveSystem,
}

#[pymethods]
impl System {
    #[staticmethod]
    fn capillary(sigma: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: WaveSystem::capillary(sigma, epsilon).map_err(err)? })
    }

    #[staticmethod]
    fn nls(epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: WaveSystem::nls(epsilon).map_err(err)? })
    }

    #[staticmethod]
    fn rossby(beta: f64, rho: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: WaveSystem::rossby(beta, rho, epsilon).map_err(err)? })
    }

    #[staticmethod]
    fn gravity(g: f64, epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: WaveSystem::gravity(g, epsilon).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.kind.name().to_string()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    /// "three-wave" or "four-wave".
    #[getter]
    fn order(&self) -> &'static str {
        self.inner.order().name()
    }

    fn dispersion(&self, k: [f64; 3]) -> PyResult<f64> {
        self.inner.dispersion(k).map_err(err)
    }

    fn coupling3(&self, kl: [f64; 3], km: [f64; 3], kn: [f64; 3]) -> PyResult<Complex64> {
        self.inner.coupling3(kl, km, kn).map_err(err)
    }

    fn coupling4(&self, kl: [f64; 3], km: [f64; 3], kmu: [f64; 3], knu: [f64; 3]) -> PyResult<Complex64> {
        self.inner.coupling4(kl, km, kmu, knu).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("System({}, epsilon={})", self.inner.kind.name(), self.inner.epsilon)
    }
}

/// One RPA realization; `scale` is the mean intensity per mode.
#[pyfunction]
#[pyo3(signature = (lattice, scale, seed, realization = 0, law = "rayleigh"))]
fn rpa_field(lattice: &Lattice, scale: Vec<f64>, seed: u64, realization: u64, law: &str) -> PyResult<Vec<Complex64>> {
    let law = match law {
        "rayleigh" => AmplitudeLaw::rayleigh(scale),
        "deterministic" => AmplitudeLaw::deterministic(scale),
        other => return Err(PyValueError::new_err(format!("law must be rayleigh or deterministic, got {other:?}"))),
    }
    .map_err(err)?;
    Ok(generate_rpa_field(lattice.inner.clone(), &law, seed, realization).map_err(err)?.amplitudes)
}

fn model_and_field(lattice: &Lattice, system: &System, amplitudes: Vec<Complex64>, time: f64) -> PyResult<(InteractionModel, WaveField)> {
    let field = WaveField::new(lattice.inner.clone(), amplitudes, time).map_err(err)?;
    let model = InteractionModel::full(&lattice.inner, &system.inner).map_err(err)?;
    Ok((model, field))
}

/// Interaction-frame amplitudes after `duration`, starting at time 0. `dt` defaults to the largest
/// allowed step.
#[pyfunction]
#[pyo3(signature = (lattice, system, amplitudes, duration, dt = None))]
fn integrate(
    py: Python<'_>,
    lattice: &Lattice,
    system: &System,
    amplitudes: Vec<Complex64>,
    duration: f64,
    dt: Option<f64>,
) -> PyResult<Vec<Complex64>> {
    let (model, field) = model_and_field(lattice, system, amplitudes, 0.0)?;
    let opts = IntegrateOptions::with_dt(dt.unwrap_or_else(|| model.max_step()));
    py.detach(|| integrate_field(&field, &model, duration, &opts))
        .map(|t| t.field.amplitudes)
        .map_err(err)
}

/// Energy of interaction-frame amplitudes at `time`; the frame phases depend on it.
#[pyfunction]
#[pyo3(signature = (lattice, system, amplitudes, time = 0.0))]
fn hamiltonian(lattice: &Lattice, system: &System, amplitudes: Vec<Complex64>, time: f64) -> PyResult<f64> {
    let (model, field) = model_and_field(lattice, system, amplitudes, time)?;
    Ok(model.hamiltonian(&field))
}

/// `(eta, gamma)` with the finite-time kernel of duration `time`.
#[pyfunction]
fn kinetic_rates(lattice: &Lattice, system: &System, n: Vec<f64>, time: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let model = KineticModel::new(&lattice.inner, &system.inner, &Broadening::Fejer { time }).map_err(err)?;
    let r = model.rates(&n).map_err(err)?;
    Ok((r.eta, r.gamma))
}

/// Closed-form steady density at each `s`, normalised on `[0, s_cut]`.
#[pyfunction]
fn steady_pdf(s: Vec<f64>, n: f64, flux: f64, eta: f64, s_cut: f64) -> PyResult<Vec<f64>> {
    let sol = SteadyPdf::new(n, flux, eta, s_cut).map_err(err)?;
    Ok(s.into_iter().map(|x| sol.density(x)).collect())
}

#[pyfunction]
#[pyo3(signature = (s, flux, gamma, eta, terms = 2))]
fn tail_series(s: f64, flux: f64, gamma: f64, eta: f64, terms: usize) -> PyResult<f64> {
    onemode::tail_series(s, flux, gamma, eta, terms).map_err(err)
}

/// Parsed config with defaults filled in, as a dict.
#[pyfunction]
fn validate_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_python(py, &parse_config(text).map_err(err)?)
}

/// Runs the experiment described by `config` (TOML text) and returns its summary.
#[pyfunction]
#[pyo3(signature = (config, out_dir, reproducible = true))]
fn run_experiment<'py>(py: Python<'py>, config: &str, out_dir: PathBuf, reproducible: bool) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(config).map_err(err)?;
    let opts = RunOptions {
        reproducible,
        out_dir: Some(out_dir),
    };
    let report = py.detach(|| run(&cfg, &opts)).map_err(err)?;
    to_python(py, &report.summary)
}

/// Acceptance verdicts as dicts with `id`, `title`, `passed` and `detail`.
#[pyfunction]
#[pyo3(signature = (ids = None, seed = 1))]
fn verify<'py>(py: Python<'py>, ids: Option<Vec<String>>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let verdicts = py.detach(|| match &ids {
        None => checks::run_acceptance(seed),
        Some(ids) => {
            let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
            checks::run_criteria(&ids, seed)
        }
    });
    to_python(py, &verdicts)
}

#[pymodule]
fn wavestat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Lattice>()?;
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(rpa_field, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(kinetic_rates, m)?)?;
    m.add_function(wrap_pyfunction!(steady_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(tail_series, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
