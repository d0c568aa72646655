//! Python bindings: kernels, sampling, moments, gradient terms and benchmark runs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qsf::bench::{
    emit_csv, emit_table, run_experiment as run_grid, Algorithm, ExperimentConfig, SingleRun,
};
use qsf::qgaussian::{self, MomentSpec, Perturbation};
use qsf::rng::{derive_stream_id, tag, RngStream};
use qsf::smoothing;
use qsf::{Error, Preset, StepSchedule};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Diverged { .. } | Error::Simulator { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Scaled q-Gaussian kernel.
#[pyclass(name = "QKernel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQKernel {
    inner: qgaussian::QKernel,
}

#[pymethods]
impl PyQKernel {
    #[new]
    #[pyo3(signature = (q, beta, dim))]
    fn new(q: f64, beta: f64, dim: usize) -> PyResult<Self> {
        qgaussian::QKernel::new(q, beta, dim)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Squared support radius, or None for unbounded support.
    fn support_radius_sq(&self) -> Option<f64> {
        let r = self.inner.support_radius_sq();
        r.is_finite().then_some(r)
    }

    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(to_py(Error::DimensionMismatch {
                expected: self.inner.dim(),
                got: x.len(),
            }));
        }
        Ok(qgaussian::density(&x, &self.inner))
    }

    /// `2 eta h / (beta (N + 2 - N q) rho)`.
    fn sf_term_one(&self, eta: Vec<f64>, cost: f64) -> PyResult<Vec<f64>> {
        let p = Perturbation::new(eta, self.inner.q());
        let mut out = vec![0.0; p.dim()];
        smoothing::sf_term_one_into(&p, cost, &self.inner, &mut out).map_err(to_py)?;
        Ok(out)
    }

    /// `eta (h+ - h-) / (beta (N + 2 - N q) rho)`.
    fn sf_term_two(&self, eta: Vec<f64>, cost_plus: f64, cost_minus: f64) -> PyResult<Vec<f64>> {
        let p = Perturbation::new(eta, self.inner.q());
        let mut out = vec![0.0; p.dim()];
        smoothing::sf_term_two_into(&p, cost_plus, cost_minus, &self.inner, &mut out)
            .map_err(to_py)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "QKernel(q={}, beta={}, dim={})",
            self.inner.q(),
            self.inner.beta(),
            self.inner.dim()
        )
    }
}

/// Draws `count` standard q-Gaussian vectors.
#[pyfunction]
#[pyo3(signature = (q, dim, count, seed=0))]
fn sample(py: Python<'_>, q: f64, dim: usize, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    py.detach(|| {
        let mut s = RngStream::new(seed, derive_stream_id(&[tag::SAMPLER]));
        (0..count)
            .map(|_| qgaussian::sample_standard(q, dim, &mut s).map(Perturbation::into_eta))
            .collect::<qsf::Result<Vec<_>>>()
    })
    .map_err(to_py)
}

#[pyfunction]
fn rho(eta: Vec<f64>, q: f64) -> f64 {
    let n = eta.len();
    qgaussian::rho(&eta, q, n)
}

/// `E[prod X_i^{b_i} / rho^b]`; raises ValueError when the moment is infinite.
#[pyfunction]
fn analytic_moment(q: f64, rho_power: u32, powers: Vec<u32>) -> PyResult<f64> {
    let dim = powers.len();
    qgaussian::analytic_moment(&MomentSpec::new(rho_power, powers), q, dim).map_err(to_py)
}

#[pyfunction]
fn normalizing_constant(q: f64, dim: usize) -> PyResult<f64> {
    qgaussian::normalizing_constant(q, dim).map_err(to_py)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    Preset::names().to_vec()
}

/// One optimization run on a queueing preset.
#[pyfunction]
#[pyo3(signature = (q, beta, algorithm="gqsf2", preset="tandem4", gamma=None, outer=10_000, inner=100, seed=0, crn=false))]
#[allow(clippy::too_many_arguments)]
fn run_single<'py>(
    py: Python<'py>,
    q: f64,
    beta: f64,
    algorithm: &str,
    preset: &str,
    gamma: Option<f64>,
    outer: usize,
    inner: usize,
    seed: u64,
    crn: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let algorithm: Algorithm = algorithm.parse().map_err(to_py)?;
    let p = Preset::by_name(preset)
        .ok_or_else(|| PyValueError::new_err(format!("unknown preset '{preset}'")))?;
    let schedule = StepSchedule::new(gamma.unwrap_or(0.75)).map_err(to_py)?;
    let result = py
        .detach(|| {
            SingleRun {
                algorithm,
                q,
                beta,
                schedule,
                outer_iterations: outer,
                inner_iterations: inner,
                network: &p.network,
                bounds: &p.bounds,
                theta0: &p.theta0,
                seed,
                stream_labels: vec![],
                crn,
                trajectory_every: None,
            }
            .run()
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("theta_final", result.theta_final)?;
    d.set_item("distance", result.distance)?;
    d.set_item("target", p.network.theta_target.clone())?;
    d.set_item("wall_time", result.wall_time.as_secs_f64())?;
    Ok(d)
}

/// Runs an experiment grid given as TOML text; returns `(csv, table)`.
#[pyfunction]
#[pyo3(signature = (config_toml, workers=0))]
fn run_experiment(py: Python<'_>, config_toml: &str, workers: usize) -> PyResult<(String, String)> {
    let exp = ExperimentConfig::from_toml(config_toml)
        .and_then(|c| c.resolve())
        .map_err(to_py)?;
    let results = py.detach(|| run_grid(&exp, workers)).map_err(to_py)?;
    Ok((emit_csv(&results, false), emit_table(&results, exp.dim())))
}

#[pymodule]
fn qsf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQKernel>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_moment, m)?)?;
    m.add_function(wrap_pyfunction!(normalizing_constant, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(run_single, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
