//! Ground-truth functions, observation sampling, noise, and the error metric
//! used by the benchmark experiments.
//!
//! Four truth sources are provided: a composite analytic function, a damped
//! harmonic oscillator (both with closed-form derivatives), and
//! pseudo-spectral solutions of the KdV and Burgers' equations.

mod spectral;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{FieldError, ObservationSet};

pub use spectral::{solve_burgers, solve_kdv, PdeProblem};

/// Reference grid size for the PDE truth solutions.
pub const PDE_GRID_SIZE: usize = 1024;
/// Time at which the PDE solutions are studied.
pub const PDE_TIME: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataGenError {
    #[error("grid size {n} must be a power of two at least {min}")]
    InvalidGridSize { n: usize, min: usize },
    #[error("final time must be finite and nonnegative, got {t}")]
    InvalidTime { t: f64 },
    #[error("solver blew up even after {refinements} time-step refinements (dt~{dt:e})")]
    SolverBlowup { refinements: usize, dt: f64 },
    #[error("derivative order {order} not available (max {max})")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("requested {requested} sample locations but the grid has {available}")]
    RequestExceedsGrid { requested: usize, available: usize },
    #[error("random grid sampling requires a grid-based problem")]
    NoSampleGrid,
    #[error("location {x} is outside the domain [{lo}, {hi}]")]
    LocationOutsideDomain { x: f64, lo: f64, hi: f64 },
    #[error("noise fraction must be finite and nonnegative, got {value}")]
    InvalidNoiseFraction { value: f64 },
    #[error("relative L2 error undefined: truth vector has zero norm")]
    ZeroNormTruth,
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `y(x) = x²·sin(16x − 6)` and its first two derivatives.
pub fn composite_truth(x: f64, order: usize) -> Result<f64, DataGenError> {
    let arg = 16.0 * x - 6.0;
    let (sin, cos) = arg.sin_cos();
    match order {
        0 => Ok(x * x * sin),
        1 => Ok(2.0 * x * sin + 16.0 * x * x * cos),
        2 => Ok(2.0 * sin + 64.0 * x * cos - 256.0 * x * x * sin),
        _ => Err(DataGenError::UnsupportedOrder { order, max: 2 }),
    }
}

const OSC_DAMPING: f64 = 0.1;
const OSC_FREQUENCY: f64 = 22.0;

/// Underdamped oscillator `y(t) = exp(−ζω₀t)·sin(√(1−ζ²)·ω₀·t)` with
/// ζ = 0.1, ω₀ = 22, and its first two derivatives.
pub fn oscillator_truth(t: f64, order: usize) -> Result<f64, DataGenError> {
    let zw = OSC_DAMPING * OSC_FREQUENCY;
    let wd = (1.0 - OSC_DAMPING * OSC_DAMPING).sqrt() * OSC_FREQUENCY;
    let envelope = (-zw * t).exp();
    let (sin, cos) = (wd * t).sin_cos();
    match order {
        0 => Ok(envelope * sin),
        1 => Ok(envelope * (-zw * sin + wd * cos)),
        2 => Ok(envelope * ((zw * zw - wd * wd) * sin - 2.0 * zw * wd * cos)),
        _ => Err(DataGenError::UnsupportedOrder { order, max: 2 }),
    }
}

/// A function whose value and derivatives can be sampled on a domain.
pub trait TruthSource {
    fn name(&self) -> &str;
    fn domain(&self) -> (f64, f64);
    fn truth(&self, x: f64, order: usize) -> Result<f64, DataGenError>;
    /// The discrete grid random samples are drawn from, when there is one.
    fn sample_grid(&self) -> Option<&[f64]> {
        None
    }
}

/// `y(x) = x²·sin(16x − 6)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompositeFunction;

impl TruthSource for CompositeFunction {
    fn name(&self) -> &str {
        "composite"
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn truth(&self, x: f64, order: usize) -> Result<f64, DataGenError> {
        composite_truth(x, order)
    }
}

/// Damped harmonic oscillator displacement on `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DampedOscillator;

impl TruthSource for DampedOscillator {
    fn name(&self) -> &str {
        "oscillator"
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn truth(&self, t: f64, order: usize) -> Result<f64, DataGenError> {
        oscillator_truth(t, order)
    }
}

impl TruthSource for PdeProblem {
    fn name(&self) -> &str {
        PdeProblem::name(self)
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn truth(&self, x: f64, order: usize) -> Result<f64, DataGenError> {
        PdeProblem::truth(self, x, order)
    }

    fn sample_grid(&self) -> Option<&[f64]> {
        Some(self.grid())
    }
}

/// Where and how much to sample per derivative order (index = order).
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingPattern {
    /// Explicit location lists; an empty list marks a missing order.
    Fixed(Vec<Vec<f64>>),
    /// Per-order counts drawn uniformly without replacement from the
    /// problem's sample grid.
    RandomFromGrid(Vec<usize>),
}

/// Additive Gaussian noise: order-`i` observations receive
/// `N(0, (fraction·σᵢ)²)` where `σᵢ` is the standard deviation of the true
/// order-`i` field over the domain grid. The standard draws depend only on
/// `seed`, so different fractions with the same seed scale one shared noise
/// realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub fraction: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            fraction: 0.0,
            seed: 0,
        }
    }

    pub fn new(fraction: f64, seed: u64) -> Result<Self, DataGenError> {
        if !fraction.is_finite() || fraction < 0.0 {
            return Err(DataGenError::InvalidNoiseFraction { value: fraction });
        }
        Ok(Self { fraction, seed })
    }
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Standard deviation of the true order-`i` field over the domain grid
/// (the solver grid when there is one, a dense uniform grid otherwise).
pub fn truth_std(problem: &dyn TruthSource, order: usize) -> Result<f64, DataGenError> {
    let values: Vec<f64> = match problem.sample_grid() {
        Some(grid) => grid
            .iter()
            .map(|&x| problem.truth(x, order))
            .collect::<Result<_, _>>()?,
        None => {
            let (lo, hi) = problem.domain();
            linspace(lo, hi, 1001)
                .into_iter()
                .map(|x| problem.truth(x, order))
                .collect::<Result<_, _>>()?
        }
    };
    Ok(population_std(&values))
}

/// Uniform grid of `count` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Sample an observation set from a truth source: locations per the pattern
/// (`seed` drives the random draws), then optional additive noise per
/// [`NoiseSpec`]. Deterministic for fixed seeds.
pub fn sample_observations(
    problem: &dyn TruthSource,
    pattern: &SamplingPattern,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<ObservationSet, DataGenError> {
    if !noise.fraction.is_finite() || noise.fraction < 0.0 {
        return Err(DataGenError::InvalidNoiseFraction {
            value: noise.fraction,
        });
    }
    let (lo, hi) = problem.domain();
    let locations_per_order: Vec<Vec<f64>> = match pattern {
        SamplingPattern::Fixed(lists) => {
            for &x in lists.iter().flatten() {
                if !(lo..=hi).contains(&x) {
                    return Err(DataGenError::LocationOutsideDomain { x, lo, hi });
                }
            }
            lists.clone()
        }
        SamplingPattern::RandomFromGrid(counts) => {
            let grid = problem.sample_grid().ok_or(DataGenError::NoSampleGrid)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut lists = Vec::with_capacity(counts.len());
            for &count in counts {
                if count > grid.len() {
                    return Err(DataGenError::RequestExceedsGrid {
                        requested: count,
                        available: grid.len(),
                    });
                }
                let mut indices: Vec<usize> =
                    rand::seq::index::sample(&mut rng, grid.len(), count).into_vec();
                indices.sort_unstable();
                lists.push(indices.into_iter().map(|i| grid[i]).collect());
            }
            lists
        }
    };

    let mut blocks = Vec::with_capacity(locations_per_order.len());
    for (order, locations) in locations_per_order.iter().enumerate() {
        let values: Vec<f64> = locations
            .iter()
            .map(|&x| problem.truth(x, order))
            .collect::<Result<_, _>>()?;
        blocks.push((locations.clone(), values));
    }

    if noise.fraction > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for (order, block) in blocks.iter_mut().enumerate() {
            if block.1.is_empty() {
                continue;
            }
            let sigma = truth_std(problem, order)?;
            for value in block.1.iter_mut() {
                let eta: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                *value += noise.fraction * sigma * eta;
            }
        }
    }

    Ok(ObservationSet::new(blocks)?)
}

/// `‖u − ũ‖₂ / ‖u‖₂` on a shared evaluation grid.
pub fn relative_l2_error(truth: &[f64], approx: &[f64]) -> Result<f64, DataGenError> {
    if truth.len() != approx.len() {
        return Err(DataGenError::LengthMismatch {
            left: truth.len(),
            right: approx.len(),
        });
    }
    let norm: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(DataGenError::ZeroNormTruth);
    }
    let diff: f64 = truth
        .iter()
        .zip(approx)
        .map(|(t, a)| (t - a) * (t - a))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Observable locations of the composite benchmark.
pub const COMPOSITE_OBSERVABLE: [f64; 4] = [0.0, 0.4, 0.6, 1.0];
/// First-derivative locations of the composite benchmark.
pub const COMPOSITE_FIRST: [f64; 3] = [0.2, 0.5, 0.8];
/// Second-derivative locations of the composite benchmark.
pub const COMPOSITE_SECOND: [f64; 3] = [0.1, 0.5, 0.9];
/// Shared sampling locations of the oscillator benchmark.
pub const OSCILLATOR_LOCATIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Sampling pattern of composite cases 1–4: case 1 observable only, case 2
/// adds the first derivative, case 3 the second, case 4 both.
pub fn composite_case_pattern(case: u8) -> Option<SamplingPattern> {
    let observable = COMPOSITE_OBSERVABLE.to_vec();
    let first = COMPOSITE_FIRST.to_vec();
    let second = COMPOSITE_SECOND.to_vec();
    match case {
        1 => Some(SamplingPattern::Fixed(vec![observable])),
        2 => Some(SamplingPattern::Fixed(vec![observable, first])),
        3 => Some(SamplingPattern::Fixed(vec![observable, Vec::new(), second])),
        4 => Some(SamplingPattern::Fixed(vec![observable, first, second])),
        _ => None,
    }
}

/// Oscillator pattern: the given derivative orders, each sampled at the five
/// shared locations.
pub fn oscillator_pattern(max_order: usize) -> SamplingPattern {
    SamplingPattern::Fixed(
        (0..=max_order)
            .map(|_| OSCILLATOR_LOCATIONS.to_vec())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn composite_values_at_zero() {
        assert_eq!(composite_truth(0.0, 0).unwrap(), 0.0);
        assert_eq!(composite_truth(0.0, 1).unwrap(), 0.0);
        assert_relative_eq!(
            composite_truth(0.0, 2).unwrap(),
            2.0 * (-6.0f64).sin(),
            max_relative = 1e-15
        );
        assert!(composite_truth(0.0, 3).is_err());
    }

    #[test]
    fn oscillator_values_at_zero() {
        assert_eq!(oscillator_truth(0.0, 0).unwrap(), 0.0);
        assert_relative_eq!(
            oscillator_truth(0.0, 1).unwrap(),
            0.99f64.sqrt() * 22.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn oscillator_satisfies_its_equation() {
        let zw = 0.1 * 22.0;
        let w0 = 22.0;
        for i in 0..50 {
            let t = i as f64 / 49.0;
            let y = oscillator_truth(t, 0).unwrap();
            let dy = oscillator_truth(t, 1).unwrap();
            let ddy = oscillator_truth(t, 2).unwrap();
            assert!(
                (ddy + 2.0 * zw * dy + w0 * w0 * y).abs() < 1e-8,
                "ODE residual at t={t}"
            );
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..1000 {
            let x: f64 = rng.random_range(0.05..0.95);
            for (truth, scale) in [
                (composite_truth as fn(f64, usize) -> Result<f64, DataGenError>, 1.0),
                (oscillator_truth, 22.0),
            ] {
                let fd1 = (truth(x + h, 0).unwrap() - truth(x - h, 0).unwrap()) / (2.0 * h);
                let d1 = truth(x, 1).unwrap();
                assert!(
                    (fd1 - d1).abs() <= 1e-6 * (scale + d1.abs()),
                    "first derivative at {x}: {d1} vs {fd1}"
                );
                let fd2 = (truth(x + h, 1).unwrap() - truth(x - h, 1).unwrap()) / (2.0 * h);
                let d2 = truth(x, 2).unwrap();
                assert!(
                    (fd2 - d2).abs() <= 1e-6 * (scale * scale + d2.abs()),
                    "second derivative at {x}: {d2} vs {fd2}"
                );
            }
        }
    }

    #[test]
    fn fixed_pattern_without_noise_reproduces_truth() {
        let pattern = composite_case_pattern(4).unwrap();
        let obs = sample_observations(
            &CompositeFunction,
            &pattern,
            &NoiseSpec::noiseless(),
            0,
        )
        .unwrap();
        assert_eq!(obs.count(0), 4);
        assert_eq!(obs.count(1), 3);
        assert_eq!(obs.count(2), 3);
        for (order, x, value) in obs.iter() {
            assert_eq!(value, composite_truth(x, order).unwrap());
        }
    }

    #[test]
    fn case_one_has_only_the_observable() {
        let pattern = composite_case_pattern(1).unwrap();
        let obs =
            sample_observations(&CompositeFunction, &pattern, &NoiseSpec::noiseless(), 0).unwrap();
        assert_eq!(obs.max_order(), 0);
        assert_eq!(obs.count(0), 4);
    }

    #[test]
    fn oscillator_pattern_covers_all_orders() {
        let obs = sample_observations(
            &DampedOscillator,
            &oscillator_pattern(2),
            &NoiseSpec::noiseless(),
            0,
        )
        .unwrap();
        assert_eq!(obs.len(), 15);
        for order in 0..=2 {
            assert_eq!(obs.locations(order), &OSCILLATOR_LOCATIONS);
        }
    }

    #[test]
    fn noise_is_deterministic_and_proportional() {
        let problem = CompositeFunction;
        let pattern = composite_case_pattern(4).unwrap();
        let noisy = NoiseSpec::new(0.1, 77).unwrap();
        let a = sample_observations(&problem, &pattern, &noisy, 0).unwrap();
        let b = sample_observations(&problem, &pattern, &noisy, 0).unwrap();
        assert_eq!(a, b);

        // Same seed at double the fraction doubles each perturbation.
        let clean =
            sample_observations(&problem, &pattern, &NoiseSpec::noiseless(), 0).unwrap();
        let doubled =
            sample_observations(&problem, &pattern, &NoiseSpec::new(0.2, 77).unwrap(), 0)
                .unwrap();
        for ((_, _, z1), ((_, _, y), (_, _, z2))) in
            a.iter().zip(clean.iter().zip(doubled.iter()))
        {
            assert_relative_eq!(2.0 * (z1 - y), z2 - y, max_relative = 1e-12);
        }
    }

    #[test]
    fn random_grid_sampling_is_seeded_and_in_range() {
        let problem = solve_burgers(256, 0.0).unwrap();
        let pattern = SamplingPattern::RandomFromGrid(vec![20, 20, 20]);
        let a = sample_observations(&problem, &pattern, &NoiseSpec::noiseless(), 5).unwrap();
        let b = sample_observations(&problem, &pattern, &NoiseSpec::noiseless(), 5).unwrap();
        let c = sample_observations(&problem, &pattern, &NoiseSpec::noiseless(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 60);
        for order in 0..=2 {
            let locations = a.locations(order);
            // without replacement: all distinct
            for (i, &x) in locations.iter().enumerate() {
                assert!(!locations[..i].contains(&x));
                assert!(problem.grid().contains(&x));
            }
        }
    }

    #[test]
    fn oversampling_the_grid_is_an_error() {
        let problem = solve_burgers(256, 0.0).unwrap();
        let pattern = SamplingPattern::RandomFromGrid(vec![300]);
        assert!(matches!(
            sample_observations(&problem, &pattern, &NoiseSpec::noiseless(), 0),
            Err(DataGenError::RequestExceedsGrid { .. })
        ));
    }

    #[test]
    fn relative_l2_error_basics() {
        let u = vec![1.0, -2.0, 3.0];
        assert_eq!(relative_l2_error(&u, &u).unwrap(), 0.0);
        assert_eq!(relative_l2_error(&u, &[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let double: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        assert_relative_eq!(
            relative_l2_error(&u, &double).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(matches!(
            relative_l2_error(&[0.0], &[1.0]),
            Err(DataGenError::ZeroNormTruth)
        ));
        assert!(matches!(
            relative_l2_error(&[1.0], &[1.0, 2.0]),
            Err(DataGenError::LengthMismatch { .. })
        ));
    }
}
