//! Closed-form posterior prediction and maximum-likelihood hyperparameter
//! fitting for the augmented field.
//!
//! With `K̂` the (noise-augmented) training Gram, `r` the stacked residuals,
//! `k★` the query/training cross covariances and `K★★` the prior variance of
//! the queried derivative order, the posterior at a query is Gaussian with
//!
//! ```text
//! μ  = m̃(x★, q) + k★ᵀ K̂⁻¹ r
//! σ² = K★★ (+ δ_q²) − k★ᵀ K̂⁻¹ k★
//! ```
//!
//! and the hyperparameters maximize
//!
//! ```text
//! log p = −P/2·log 2π − ½ log det K̂ − ½ rᵀ K̂⁻¹ r.
//! ```
//!
//! All solves go through one cached Cholesky factorization of `K̂`.

mod optimizer;

use nalgebra::{Cholesky, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{
    assemble_gram, cross_vector, residual_vector, FieldError, Hyperparameters, JitterPolicy,
    ObservationSet, QuerySpec,
};
use crate::kernel::{HermiteTable, KernelError, MeanFunction};

pub use optimizer::{minimize, SimplexResult};

/// Central 95% band multiplier.
pub const BAND_MULTIPLIER: f64 = 1.96;

/// Pre-clamp posterior variances below `−1e-6·a²` trigger a numerical-health
/// warning.
pub const VARIANCE_HEALTH_FACTOR: f64 = -1e-6;

const SIMPLEX_STEP: f64 = 0.5;
const SIMPLEX_DIAMETER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("likelihood undefined at these hyperparameters (factorization failed)")]
    LikelihoodUndefined,
    #[error("all {restarts} optimizer restarts failed to produce a finite likelihood")]
    AllRestartsFailed { restarts: usize },
    #[error(
        "query order {order} unsupported: data of order {data_order} with Hermite capacity \
         {capacity} answers orders up to {max_supported}"
    )]
    UnsupportedOrder {
        order: usize,
        max_supported: usize,
        capacity: usize,
        data_order: usize,
    },
}

/// How measurement noise enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Exact observations; all δᵢ pinned to zero.
    Noiseless,
    /// One shared intensity δ for every derivative order.
    OneDelta,
    /// An independent δᵢ per derivative order present in the data.
    MultiDelta,
}

impl NoiseMode {
    pub fn is_noisy(&self) -> bool {
        !matches!(self, NoiseMode::Noiseless)
    }
}

/// Optimizer settings; every stochastic choice flows from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_evals: usize,
    pub seed: u64,
    pub jitter: JitterPolicy,
    /// Hermite table capacity; raised automatically to `2n` when the data
    /// contain derivatives of order `n > capacity/2`.
    pub hermite_order: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_evals: 2000,
            seed: 0,
            jitter: JitterPolicy::default(),
            hermite_order: crate::kernel::DEFAULT_MAX_ORDER,
        }
    }
}

/// Per-restart outcome, kept for the fit report.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary {
    pub log_likelihood: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub log_likelihood: f64,
    pub chosen_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

/// Posterior of one derivative order at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub location: f64,
    pub order: usize,
    pub mean: f64,
    /// Clamped at zero.
    pub variance: f64,
    /// As computed, before clamping; kept visible for numerical diagnostics.
    pub raw_variance: f64,
    pub lo95: f64,
    pub hi95: f64,
}

impl Prediction {
    pub fn stddev(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn gaussian_log_density(factor: &Cholesky<f64, Dyn>, residual: &DVector<f64>) -> f64 {
    let p = residual.len() as f64;
    let half_log_det: f64 = factor
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.ln())
        .sum();
    let alpha = factor.solve(residual);
    -0.5 * p * (2.0 * std::f64::consts::PI).ln() - half_log_det - 0.5 * residual.dot(&alpha)
}

fn likelihood_unchecked(
    obs: &ObservationSet,
    mean: &MeanFunction,
    hp: &Hyperparameters,
    table: &HermiteTable,
    noisy: bool,
    jitter: &JitterPolicy,
) -> Result<f64, InferenceError> {
    let gram = assemble_gram(obs, hp, table, noisy)?;
    let factored = gram.factorize(jitter).map_err(|e| match e {
        FieldError::FactorizationFailed { .. } => InferenceError::LikelihoodUndefined,
        other => InferenceError::Field(other),
    })?;
    let residual = residual_vector(obs, mean);
    Ok(gaussian_log_density(&factored.factor, &residual))
}

/// Log-likelihood of the data under the (possibly noise-augmented) prior.
pub fn log_likelihood(
    obs: &ObservationSet,
    mean: &MeanFunction,
    hp: &Hyperparameters,
    table: &HermiteTable,
    noisy: bool,
    jitter: &JitterPolicy,
) -> Result<f64, InferenceError> {
    if !noisy {
        obs.check_noiseless_compatible()?;
    }
    likelihood_unchecked(obs, mean, hp, table, noisy, jitter)
}

/// A trained model: hyperparameters plus the cached factorization and solved
/// residual, ready for posterior queries. Immutable once constructed.
#[derive(Debug, Clone)]
pub struct FittedModel {
    observations: ObservationSet,
    mean: MeanFunction,
    hyperparameters: Hyperparameters,
    mode: NoiseMode,
    table: HermiteTable,
    factor: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter_applied: f64,
    jitter_policy: JitterPolicy,
    log_likelihood: f64,
    report: Option<FitReport>,
}

impl FittedModel {
    /// Build a model directly from given hyperparameters.
    pub fn with_hyperparameters(
        obs: ObservationSet,
        mean: MeanFunction,
        hp: Hyperparameters,
        mode: NoiseMode,
        table: HermiteTable,
        jitter: &JitterPolicy,
    ) -> Result<Self, InferenceError> {
        if !mode.is_noisy() {
            obs.check_noiseless_compatible()?;
        }
        let needed = 2 * obs.max_order();
        if table.max_order() < needed {
            return Err(KernelError::OrderOverflow {
                requested: needed,
                capacity: table.max_order(),
            }
            .into());
        }
        let gram = assemble_gram(&obs, &hp, &table, mode.is_noisy())?;
        let factored = gram.factorize(jitter)?;
        let residual = residual_vector(&obs, &mean);
        let log_likelihood = gaussian_log_density(&factored.factor, &residual);
        let alpha = factored.factor.solve(&residual);
        Ok(Self {
            observations: obs,
            mean,
            hyperparameters: hp,
            mode,
            table,
            factor: factored.factor,
            alpha,
            jitter_applied: factored.jitter,
            jitter_policy: *jitter,
            log_likelihood,
            report: None,
        })
    }

    pub fn observations(&self) -> &ObservationSet {
        &self.observations
    }

    pub fn mean(&self) -> &MeanFunction {
        &self.mean
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyperparameters
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn hermite_table(&self) -> &HermiteTable {
        &self.table
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    pub fn jitter_policy(&self) -> &JitterPolicy {
        &self.jitter_policy
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn fit_report(&self) -> Option<&FitReport> {
        self.report.as_ref()
    }

    /// Highest query order this model can answer: limited by the Hermite
    /// capacity, since the cross covariances need order `q + n`.
    pub fn max_query_order(&self) -> usize {
        self.table.max_order() - self.observations.max_order()
    }

    /// Posterior mean, variance and central 95% band at one query.
    pub fn posterior(&self, query: &QuerySpec) -> Result<Prediction, InferenceError> {
        let data_order = self.observations.max_order();
        if query.order + data_order > self.table.max_order() {
            return Err(InferenceError::UnsupportedOrder {
                order: query.order,
                max_supported: self.max_query_order(),
                capacity: self.table.max_order(),
                data_order,
            });
        }
        let kx = cross_vector(&self.observations, &self.hyperparameters, &self.table, query)?;
        let kernel = self.hyperparameters.kernel();
        // K★★ in closed form: not table-limited, so extrapolated orders up
        // to capacity − data order stay answerable.
        let prior = kernel.derivative_prior_variance(query.order);
        let mean = self.mean.derivative(query.order, query.location) + kx.dot(&self.alpha);
        let solved = self.factor.solve(&kx);
        let mut raw_variance = prior - kx.dot(&solved);
        if self.mode.is_noisy() {
            let delta = self.hyperparameters.noise_for(query.order);
            raw_variance += delta * delta;
        }
        let amplitude = self.hyperparameters.amplitude();
        if raw_variance < VARIANCE_HEALTH_FACTOR * amplitude * amplitude {
            log::warn!(
                "posterior variance {raw_variance:e} at (x={}, order {}) is below the numerical \
                 health bound",
                query.location,
                query.order
            );
        }
        let variance = raw_variance.max(0.0);
        let band = BAND_MULTIPLIER * variance.sqrt();
        Ok(Prediction {
            location: query.location,
            order: query.order,
            mean,
            variance,
            raw_variance,
            lo95: mean - band,
            hi95: mean + band,
        })
    }

    /// One prediction per `(order, grid point)`, orders outermost, reusing
    /// the cached factorization.
    pub fn predict_curve(
        &self,
        grid: &[f64],
        orders: &[usize],
    ) -> Result<Vec<Prediction>, InferenceError> {
        let mut out = Vec::with_capacity(grid.len() * orders.len());
        for &order in orders {
            for &x in grid {
                out.push(self.posterior(&QuerySpec::new(x, order))?);
            }
        }
        Ok(out)
    }
}

/// Parameter layout for the log-space optimization.
struct ParamLayout {
    /// Orders that carry their own δ (MultiDelta); empty otherwise.
    delta_orders: Vec<usize>,
    mode: NoiseMode,
    max_order: usize,
}

impl ParamLayout {
    fn dims(&self) -> usize {
        2 + match self.mode {
            NoiseMode::Noiseless => 0,
            NoiseMode::OneDelta => 1,
            NoiseMode::MultiDelta => self.delta_orders.len(),
        }
    }

    fn decode(&self, params: &[f64]) -> Result<Hyperparameters, FieldError> {
        let amplitude = params[0].exp();
        let length_scale = params[1].exp();
        let noise = match self.mode {
            NoiseMode::Noiseless => Vec::new(),
            NoiseMode::OneDelta => vec![params[2].exp(); self.max_order + 1],
            NoiseMode::MultiDelta => {
                let mut noise = vec![0.0; self.max_order + 1];
                for (slot, &order) in self.delta_orders.iter().enumerate() {
                    noise[order] = params[2 + slot].exp();
                }
                noise
            }
        };
        Hyperparameters::new(amplitude, length_scale, noise)
    }
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn positive_or(value: f64, fallback: f64) -> f64 {
    if value.is_finite() && value > 0.0 {
        value
    } else {
        fallback
    }
}

/// Maximum-likelihood fit: multi-start Nelder–Mead over the log-transformed
/// hyperparameters. Deterministic for a given `config.seed`; the best restart
/// wins, ties broken by lowest restart index.
pub fn fit(
    obs: &ObservationSet,
    mean: &MeanFunction,
    mode: NoiseMode,
    config: &FitConfig,
) -> Result<FittedModel, InferenceError> {
    if !mode.is_noisy() {
        obs.check_noiseless_compatible()?;
    }
    let max_order = obs.max_order();
    let table = HermiteTable::new(config.hermite_order.max(2 * max_order));

    let all_values: Vec<f64> = obs.iter().map(|(_, _, v)| v).collect();
    let pooled_std = positive_or(population_std(&all_values), 1.0);
    let observable_std = if obs.count(0) > 0 {
        positive_or(population_std(obs.values(0)), pooled_std)
    } else {
        pooled_std
    };
    let (lo, hi) = obs.input_range();
    let input_range = positive_or(hi - lo, 1.0);

    let delta_orders: Vec<usize> = (0..=max_order).filter(|&i| obs.count(i) > 0).collect();
    let layout = ParamLayout {
        delta_orders,
        mode,
        max_order,
    };

    // Log-uniform draw ranges per coordinate.
    let mut ranges: Vec<(f64, f64)> = vec![
        (0.01 * observable_std, 100.0 * observable_std),
        (0.01 * input_range, 10.0 * input_range),
    ];
    match mode {
        NoiseMode::Noiseless => {}
        NoiseMode::OneDelta => ranges.push((1e-4 * pooled_std, pooled_std)),
        NoiseMode::MultiDelta => {
            for &order in &layout.delta_orders {
                let s = positive_or(population_std(obs.values(order)), pooled_std);
                ranges.push((1e-4 * s, s));
            }
        }
    }
    debug_assert_eq!(ranges.len(), layout.dims());

    let objective = |params: &[f64]| -> f64 {
        match layout.decode(params) {
            Ok(hp) => {
                match likelihood_unchecked(obs, mean, &hp, &table, mode.is_noisy(), &config.jitter)
                {
                    Ok(ll) if ll.is_finite() => -ll,
                    _ => f64::INFINITY,
                }
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(usize, SimplexResult)> = None;
    let mut summaries = Vec::with_capacity(config.restarts);
    for restart in 0..config.restarts {
        let start: Vec<f64> = ranges
            .iter()
            .map(|&(lo, hi)| {
                let u: f64 = rng.random();
                lo.ln() + u * (hi.ln() - lo.ln())
            })
            .collect();
        let result = minimize(
            objective,
            &start,
            SIMPLEX_STEP,
            config.max_evals,
            SIMPLEX_DIAMETER_TOL,
        );
        summaries.push(RestartSummary {
            log_likelihood: -result.value,
            evaluations: result.evaluations,
            converged: result.converged,
        });
        let improved = match &best {
            Some((_, current)) => result.value < current.value,
            None => true,
        };
        if improved {
            best = Some((restart, result));
        }
    }

    let (chosen_restart, winner) = best.ok_or(InferenceError::AllRestartsFailed {
        restarts: config.restarts,
    })?;
    if !winner.value.is_finite() {
        return Err(InferenceError::AllRestartsFailed {
            restarts: config.restarts,
        });
    }
    let hp = layout.decode(&winner.point)?;
    let mut model = FittedModel::with_hyperparameters(
        obs.clone(),
        mean.clone(),
        hp,
        mode,
        table,
        &config.jitter,
    )?;
    model.report = Some(FitReport {
        log_likelihood: -winner.value,
        chosen_restart,
        restarts: summaries,
    });
    Ok(model)
}
