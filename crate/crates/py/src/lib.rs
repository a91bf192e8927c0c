//! Python bindings: the observation container, model fitting and posterior
//! queries, the benchmark truth functions, and the PDE solvers.
//!
//! Build with `cargo build -p agrf-py --release`; the resulting
//! `libagrf_py.so` imports as `agrf_py` once renamed (see
//! `python/smoke_test.py`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use agrf_core::datagen::{self, sample_observations, NoiseSpec, PdeProblem, SamplingPattern};
use agrf_core::field::{Hyperparameters, JitterPolicy, ObservationSet as CoreObservations, QuerySpec};
use agrf_core::inference::{
    fit as core_fit, log_likelihood as core_log_likelihood, FitConfig, FittedModel, NoiseMode,
};
use agrf_core::kernel::{
    kernel_derivative as core_kernel_derivative, HermiteTable, MeanFunction,
    SquaredExponentialKernel, DEFAULT_MAX_ORDER,
};

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn runtime_err(err: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(err.to_string())
}

fn parse_mode(mode: &str) -> PyResult<NoiseMode> {
    match mode {
        "noiseless" => Ok(NoiseMode::Noiseless),
        "noisy-one-delta" => Ok(NoiseMode::OneDelta),
        "noisy-multi-delta" => Ok(NoiseMode::MultiDelta),
        other => Err(value_err(format!(
            "unknown mode `{other}` (expected noiseless, noisy-one-delta or noisy-multi-delta)"
        ))),
    }
}

fn mean_from(coefficients: Option<Vec<f64>>) -> MeanFunction {
    MeanFunction::polynomial(coefficients.unwrap_or_default())
}

/// `(order, x, mean, variance, lo95, hi95)`.
type PredictionRow = (usize, f64, f64, f64, f64, f64);

/// Mixed kernel derivative ∂^{i+j}k/∂xⁱ∂x'ʲ of the squared exponential
/// kernel in closed form.
#[pyfunction]
#[pyo3(signature = (amplitude, length_scale, i, j, x, xp, max_order=None))]
fn kernel_derivative(
    amplitude: f64,
    length_scale: f64,
    i: usize,
    j: usize,
    x: f64,
    xp: f64,
    max_order: Option<usize>,
) -> PyResult<f64> {
    let kernel = SquaredExponentialKernel::new(amplitude, length_scale).map_err(value_err)?;
    let table = HermiteTable::new(max_order.unwrap_or(DEFAULT_MAX_ORDER));
    core_kernel_derivative(&kernel, &table, i, j, x, xp).map_err(value_err)
}

/// `y(x) = x²·sin(16x−6)` and its first two derivatives.
#[pyfunction]
#[pyo3(signature = (x, order=0))]
fn composite_truth(x: f64, order: usize) -> PyResult<f64> {
    datagen::composite_truth(x, order).map_err(value_err)
}

/// Damped oscillator displacement and its first two derivatives.
#[pyfunction]
#[pyo3(signature = (t, order=0))]
fn oscillator_truth(t: f64, order: usize) -> PyResult<f64> {
    datagen::oscillator_truth(t, order).map_err(value_err)
}

/// `‖u − ũ‖₂ / ‖u‖₂`.
#[pyfunction]
fn relative_l2_error(truth: Vec<f64>, approx: Vec<f64>) -> PyResult<f64> {
    datagen::relative_l2_error(&truth, &approx).map_err(value_err)
}

/// Observations of a function and its derivatives, grouped by order.
#[pyclass(name = "ObservationSet", skip_from_py_object)]
struct PyObservationSet {
    inner: CoreObservations,
}

#[pymethods]
impl PyObservationSet {
    /// Build from per-order location and value lists (index = order).
    #[new]
    fn new(locations: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> PyResult<Self> {
        if locations.len() != values.len() {
            return Err(value_err("locations and values need one list per order"));
        }
        let blocks = locations.into_iter().zip(values).collect();
        Ok(Self {
            inner: CoreObservations::new(blocks).map_err(value_err)?,
        })
    }

    /// Build from `(order, x, value)` rows.
    #[staticmethod]
    fn from_rows(rows: Vec<(usize, f64, f64)>) -> PyResult<Self> {
        Ok(Self {
            inner: CoreObservations::from_rows(&rows).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    fn count(&self, order: usize) -> usize {
        self.inner.count(order)
    }

    fn locations(&self, order: usize) -> Vec<f64> {
        self.inner.locations(order).to_vec()
    }

    fn values(&self, order: usize) -> Vec<f64> {
        self.inner.values(order).to_vec()
    }

    fn rows(&self) -> Vec<(usize, f64, f64)> {
        self.inner.iter().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "ObservationSet({} observations, orders 0..={})",
            self.inner.len(),
            self.inner.max_order()
        )
    }
}

/// A fitted model ready for posterior queries.
#[pyclass(name = "Model")]
struct PyModel {
    inner: FittedModel,
}

#[pymethods]
impl PyModel {
    /// Maximum-likelihood fit (multi-start simplex over log parameters).
    #[staticmethod]
    #[pyo3(signature = (observations, mode="noiseless", mean=None, restarts=8, max_evals=2000, seed=0))]
    fn fit(
        observations: &PyObservationSet,
        mode: &str,
        mean: Option<Vec<f64>>,
        restarts: usize,
        max_evals: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let config = FitConfig {
            restarts,
            max_evals,
            seed,
            ..FitConfig::default()
        };
        let model = core_fit(
            &observations.inner,
            &mean_from(mean),
            parse_mode(mode)?,
            &config,
        )
        .map_err(runtime_err)?;
        Ok(Self { inner: model })
    }

    /// Build a model from explicit hyperparameters.
    #[staticmethod]
    #[pyo3(signature = (observations, amplitude, length_scale, noise=None, mode="noiseless", mean=None))]
    fn with_hyperparameters(
        observations: &PyObservationSet,
        amplitude: f64,
        length_scale: f64,
        noise: Option<Vec<f64>>,
        mode: &str,
        mean: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let hp = Hyperparameters::new(amplitude, length_scale, noise.unwrap_or_default())
            .map_err(value_err)?;
        let model = FittedModel::with_hyperparameters(
            observations.inner.clone(),
            mean_from(mean),
            hp,
            parse_mode(mode)?,
            HermiteTable::default(),
            &JitterPolicy::default(),
        )
        .map_err(runtime_err)?;
        Ok(Self { inner: model })
    }

    /// Posterior `(mean, variance, lo95, hi95)` of the order-th derivative
    /// at `x`.
    #[pyo3(signature = (x, order=0))]
    fn posterior(&self, x: f64, order: usize) -> PyResult<(f64, f64, f64, f64)> {
        let p = self
            .inner
            .posterior(&QuerySpec::new(x, order))
            .map_err(value_err)?;
        Ok((p.mean, p.variance, p.lo95, p.hi95))
    }

    /// Batch predictions: `(order, x, mean, variance, lo95, hi95)` rows,
    /// orders outermost.
    fn predict_curve(&self, grid: Vec<f64>, orders: Vec<usize>) -> PyResult<Vec<PredictionRow>> {
        let predictions = self.inner.predict_curve(&grid, &orders).map_err(value_err)?;
        Ok(predictions
            .into_iter()
            .map(|p| (p.order, p.location, p.mean, p.variance, p.lo95, p.hi95))
            .collect())
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.hyperparameters().amplitude()
    }

    #[getter]
    fn length_scale(&self) -> f64 {
        self.inner.hyperparameters().length_scale()
    }

    #[getter]
    fn noise(&self) -> Vec<f64> {
        self.inner.hyperparameters().noise().to_vec()
    }

    #[getter]
    fn max_query_order(&self) -> usize {
        self.inner.max_query_order()
    }

    fn log_likelihood(&self) -> f64 {
        self.inner.log_likelihood()
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(a={:.6}, l={:.6}, P={})",
            self.inner.hyperparameters().amplitude(),
            self.inner.hyperparameters().length_scale(),
            self.inner.observations().len()
        )
    }
}

/// Log-likelihood of the data under given hyperparameters.
#[pyfunction]
#[pyo3(signature = (observations, amplitude, length_scale, noise=None, mode="noiseless", mean=None))]
fn log_likelihood(
    observations: &PyObservationSet,
    amplitude: f64,
    length_scale: f64,
    noise: Option<Vec<f64>>,
    mode: &str,
    mean: Option<Vec<f64>>,
) -> PyResult<f64> {
    let hp = Hyperparameters::new(amplitude, length_scale, noise.unwrap_or_default())
        .map_err(value_err)?;
    core_log_likelihood(
        &observations.inner,
        &mean_from(mean),
        &hp,
        &HermiteTable::default(),
        parse_mode(mode)?.is_noisy(),
        &JitterPolicy::default(),
    )
    .map_err(runtime_err)
}

/// A solved periodic PDE: grid samples and spectral interpolation.
#[pyclass(name = "PdeSolution")]
struct PyPdeSolution {
    inner: PdeProblem,
}

#[pymethods]
impl PyPdeSolution {
    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn grid_size(&self) -> usize {
        self.inner.grid_size()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    /// Grid samples of the order-th spatial derivative.
    #[pyo3(signature = (order=0))]
    fn values(&self, order: usize) -> PyResult<Vec<f64>> {
        Ok(self.inner.grid_values(order).map_err(value_err)?.to_vec())
    }

    /// Trigonometric interpolation of the order-th derivative at `x`.
    #[pyo3(signature = (x, order=0))]
    fn truth(&self, x: f64, order: usize) -> PyResult<f64> {
        self.inner.truth(x, order).map_err(value_err)
    }

    /// Draw per-order observation counts from the solver grid, optionally
    /// with proportional Gaussian noise.
    #[pyo3(signature = (counts, noise_fraction=0.0, seed=0, noise_seed=0))]
    fn sample(
        &self,
        counts: Vec<usize>,
        noise_fraction: f64,
        seed: u64,
        noise_seed: u64,
    ) -> PyResult<PyObservationSet> {
        let spec = NoiseSpec::new(noise_fraction, noise_seed).map_err(value_err)?;
        let obs = sample_observations(
            &self.inner,
            &SamplingPattern::RandomFromGrid(counts),
            &spec,
            seed,
        )
        .map_err(value_err)?;
        Ok(PyObservationSet { inner: obs })
    }

    fn __repr__(&self) -> String {
        format!(
            "PdeSolution({}, n={}, t={})",
            self.inner.name(),
            self.inner.grid_size(),
            self.inner.time()
        )
    }
}

/// KdV equation `u_t + u·u_x + 0.0005·u_xxx = 0` from `cos(2πx)`.
#[pyfunction]
#[pyo3(signature = (grid_size=1024, time=0.5))]
fn solve_kdv(grid_size: usize, time: f64) -> PyResult<PyPdeSolution> {
    Ok(PyPdeSolution {
        inner: datagen::solve_kdv(grid_size, time).map_err(runtime_err)?,
    })
}

/// Burgers' equation `u_t + u·u_x − 0.01·u_xx = 0` from `sin(2πx)`.
#[pyfunction]
#[pyo3(signature = (grid_size=1024, time=0.5))]
fn solve_burgers(grid_size: usize, time: f64) -> PyResult<PyPdeSolution> {
    Ok(PyPdeSolution {
        inner: datagen::solve_burgers(grid_size, time).map_err(runtime_err)?,
    })
}

#[pymodule]
fn agrf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObservationSet>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyPdeSolution>()?;
    m.add_function(wrap_pyfunction!(kernel_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(log_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(composite_truth, m)?)?;
    m.add_function(wrap_pyfunction!(oscillator_truth, m)?)?;
    m.add_function(wrap_pyfunction!(relative_l2_error, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kdv, m)?)?;
    m.add_function(wrap_pyfunction!(solve_burgers, m)?)?;
    Ok(())
}
