//! Observation storage and assembly of the block mean vector and block
//! covariance matrix of the augmented field's joint Gaussian distribution.
//!
//! Observations of the observable and of its derivatives are grouped by
//! derivative order. Rows of every assembled vector or matrix are stacked by
//! ascending order, then by the input sequence within each order; that layout
//! is fixed and shared by [`assemble_gram`], [`cross_vector`] and
//! [`residual_vector`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::kernel::{
    kernel_derivative, HermiteTable, KernelError, MeanFunction, SquaredExponentialKernel,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("observation set is empty")]
    Empty,
    #[error("order {order}: {locations} locations but {values} values")]
    MismatchedLengths {
        order: usize,
        locations: usize,
        values: usize,
    },
    #[error("order {order}: non-finite observation ({x}, {value})")]
    NonFiniteObservation { order: usize, x: f64, value: f64 },
    #[error(
        "coincident duplicate observations are not allowed in noiseless mode: {}",
        format_duplicates(.0)
    )]
    CoincidentDuplicates(Vec<(usize, f64)>),
    #[error("noise intensity for order {order} must be finite and nonnegative, got {value}")]
    InvalidNoise { order: usize, value: f64 },
    #[error(
        "non-finite covariance between (order {i}, x={x}) and (order {j}, x={xp})"
    )]
    NonFiniteKernelValue { i: usize, x: f64, j: usize, xp: f64 },
    #[error("covariance factorization failed even with jitter up to {max_jitter:e}")]
    FactorizationFailed { max_jitter: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn format_duplicates(rows: &[(usize, f64)]) -> String {
    rows.iter()
        .map(|(order, x)| format!("(order {order}, x={x})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// All data pairs grouped by derivative order. Order `i` holds the samples of
/// the `i`-th derivative; any order may be empty (missing data).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    blocks: Vec<OrderBlock>,
}

#[derive(Debug, Clone, PartialEq)]
struct OrderBlock {
    locations: Vec<f64>,
    values: Vec<f64>,
}

impl ObservationSet {
    /// Build from per-order `(locations, values)` pairs, index = derivative
    /// order. Trailing empty orders are trimmed so that `max_order` is the
    /// highest order actually present.
    pub fn new(blocks: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, FieldError> {
        let mut out = Vec::with_capacity(blocks.len());
        for (order, (locations, values)) in blocks.into_iter().enumerate() {
            if locations.len() != values.len() {
                return Err(FieldError::MismatchedLengths {
                    order,
                    locations: locations.len(),
                    values: values.len(),
                });
            }
            for (&x, &value) in locations.iter().zip(&values) {
                if !x.is_finite() || !value.is_finite() {
                    return Err(FieldError::NonFiniteObservation { order, x, value });
                }
            }
            out.push(OrderBlock { locations, values });
        }
        while out.last().is_some_and(|b| b.locations.is_empty()) {
            out.pop();
        }
        if out.iter().map(|b| b.locations.len()).sum::<usize>() == 0 {
            return Err(FieldError::Empty);
        }
        Ok(Self { blocks: out })
    }

    /// Build from `(order, x, value)` rows in any order; the within-order
    /// sequence of the input is preserved.
    pub fn from_rows(rows: &[(usize, f64, f64)]) -> Result<Self, FieldError> {
        let max_order = rows.iter().map(|r| r.0).max().ok_or(FieldError::Empty)?;
        let mut blocks = vec![(Vec::new(), Vec::new()); max_order + 1];
        for &(order, x, value) in rows {
            blocks[order].0.push(x);
            blocks[order].1.push(value);
        }
        Self::new(blocks)
    }

    /// Highest derivative order present (`n`).
    pub fn max_order(&self) -> usize {
        self.blocks.len() - 1
    }

    /// Total number of observations (`P`).
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.locations.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of observations of the given order (`pᵢ`); zero beyond `n`.
    pub fn count(&self, order: usize) -> usize {
        self.blocks.get(order).map_or(0, |b| b.locations.len())
    }

    pub fn locations(&self, order: usize) -> &[f64] {
        self.blocks.get(order).map_or(&[], |b| &b.locations)
    }

    pub fn values(&self, order: usize) -> &[f64] {
        self.blocks.get(order).map_or(&[], |b| &b.values)
    }

    /// `(order, x, value)` triples in the canonical stacked layout.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.blocks.iter().enumerate().flat_map(|(order, block)| {
            block
                .locations
                .iter()
                .zip(&block.values)
                .map(move |(&x, &value)| (order, x, value))
        })
    }

    /// Smallest enclosing input interval over all orders.
    pub fn input_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, x, _) in self.iter() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo, hi)
    }

    /// Reject coincident duplicates of the same order: they make the
    /// noiseless Gram singular by construction. Only the noisy formulation
    /// can explain two different measurements at one location.
    pub fn check_noiseless_compatible(&self) -> Result<(), FieldError> {
        let mut offending = Vec::new();
        for (order, block) in self.blocks.iter().enumerate() {
            for (a, &xa) in block.locations.iter().enumerate() {
                if block.locations[..a].contains(&xa) && !offending.contains(&(order, xa)) {
                    offending.push((order, xa));
                }
            }
        }
        if offending.is_empty() {
            Ok(())
        } else {
            Err(FieldError::CoincidentDuplicates(offending))
        }
    }
}

/// Kernel amplitude and length scale plus one noise intensity per order
/// (all zero in noiseless mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    amplitude: f64,
    length_scale: f64,
    noise: Vec<f64>,
}

impl Hyperparameters {
    pub fn new(amplitude: f64, length_scale: f64, noise: Vec<f64>) -> Result<Self, FieldError> {
        SquaredExponentialKernel::new(amplitude, length_scale)?;
        for (order, &delta) in noise.iter().enumerate() {
            if !delta.is_finite() || delta < 0.0 {
                return Err(FieldError::InvalidNoise {
                    order,
                    value: delta,
                });
            }
        }
        Ok(Self {
            amplitude,
            length_scale,
            noise,
        })
    }

    pub fn noiseless(amplitude: f64, length_scale: f64) -> Result<Self, FieldError> {
        Self::new(amplitude, length_scale, Vec::new())
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Per-order noise intensities δ₀…δₙ as stored; may be shorter than the
    /// number of orders in a data set, in which case the tail is zero.
    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn noise_for(&self, order: usize) -> f64 {
        self.noise.get(order).copied().unwrap_or(0.0)
    }

    pub fn kernel(&self) -> SquaredExponentialKernel {
        SquaredExponentialKernel::new(self.amplitude, self.length_scale)
            .expect("validated at construction")
    }
}

/// A query: derivative order `q` at location `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySpec {
    pub location: f64,
    pub order: usize,
}

impl QuerySpec {
    pub fn new(location: f64, order: usize) -> Self {
        Self { location, order }
    }
}

/// Escalating diagonal inflation used to rescue a numerically indefinite
/// Gram: `ε·mean(diag)` with `ε` stepping by factors of ten from `initial`
/// to `cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterPolicy {
    pub initial: f64,
    pub cap: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            initial: 1e-12,
            cap: 1e-6,
        }
    }
}

/// Cholesky factor of a (possibly jittered) Gram, with the jitter that was
/// actually applied (zero when the clean factorization succeeded).
pub struct FactoredGram {
    pub factor: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

/// Dense symmetric `P×P` training covariance with its row index map.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGram {
    matrix: DMatrix<f64>,
    index: Vec<(usize, usize)>,
}

impl BlockGram {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Row → (derivative order, index within that order).
    pub fn index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn size(&self) -> usize {
        self.index.len()
    }

    /// Cholesky factorization with the escalating jitter policy.
    pub fn factorize(&self, policy: &JitterPolicy) -> Result<FactoredGram, FieldError> {
        if let Some(factor) = Cholesky::new(self.matrix.clone()) {
            return Ok(FactoredGram { factor, jitter: 0.0 });
        }
        let mean_diag = self.matrix.diagonal().mean();
        let mut scale = policy.initial;
        while scale <= policy.cap * (1.0 + 1e-12) {
            let jitter = scale * mean_diag;
            let mut bumped = self.matrix.clone();
            for d in 0..bumped.nrows() {
                bumped[(d, d)] += jitter;
            }
            if let Some(factor) = Cholesky::new(bumped) {
                return Ok(FactoredGram { factor, jitter });
            }
            scale *= 10.0;
        }
        Err(FieldError::FactorizationFailed {
            max_jitter: policy.cap * mean_diag,
        })
    }
}

/// Assemble the `P×P` covariance `K[(i,j),(i',j')] = k̃(xᵢⱼ, i, xᵢ'ⱼ', i')`,
/// adding `δᵢ²` to the diagonal of block `(i,i)` when `noisy`. The upper
/// triangle is computed and mirrored, so the result is exactly symmetric.
pub fn assemble_gram(
    obs: &ObservationSet,
    hp: &Hyperparameters,
    table: &HermiteTable,
    noisy: bool,
) -> Result<BlockGram, FieldError> {
    let kernel = hp.kernel();
    let index: Vec<(usize, usize)> = obs
        .iter()
        .scan(vec![0usize; obs.max_order() + 1], |counters, (order, _, _)| {
            let within = counters[order];
            counters[order] += 1;
            Some((order, within))
        })
        .collect();
    let flat: Vec<(usize, f64)> = obs.iter().map(|(order, x, _)| (order, x)).collect();
    let p = flat.len();
    let mut matrix = DMatrix::zeros(p, p);
    for row in 0..p {
        let (oi, xi) = flat[row];
        for col in row..p {
            let (oj, xj) = flat[col];
            let value = kernel_derivative(&kernel, table, oi, oj, xi, xj)?;
            if !value.is_finite() {
                return Err(FieldError::NonFiniteKernelValue {
                    i: oi,
                    x: xi,
                    j: oj,
                    xp: xj,
                });
            }
            matrix[(row, col)] = value;
            matrix[(col, row)] = value;
        }
    }
    if noisy {
        for (row, &(order, _)) in index.iter().enumerate() {
            let delta = hp.noise_for(order);
            matrix[(row, row)] += delta * delta;
        }
    }
    Ok(BlockGram { matrix, index })
}

/// Covariances between the query `(x_q, q)` and every training observation,
/// in the canonical stacked layout. No noise term is ever added: measurement
/// noises are independent, so cross covariances are those of the noiseless
/// field.
pub fn cross_vector(
    obs: &ObservationSet,
    hp: &Hyperparameters,
    table: &HermiteTable,
    query: &QuerySpec,
) -> Result<DVector<f64>, FieldError> {
    let kernel = hp.kernel();
    let mut entries = Vec::with_capacity(obs.len());
    for (order, x, _) in obs.iter() {
        let value = kernel_derivative(&kernel, table, query.order, order, query.location, x)?;
        if !value.is_finite() {
            return Err(FieldError::NonFiniteKernelValue {
                i: query.order,
                x: query.location,
                j: order,
                xp: x,
            });
        }
        entries.push(value);
    }
    Ok(DVector::from_vec(entries))
}

/// Stacked observed values minus the mean of their derivative order.
pub fn residual_vector(obs: &ObservationSet, mean: &MeanFunction) -> DVector<f64> {
    DVector::from_iterator(
        obs.len(),
        obs.iter()
            .map(|(order, x, value)| value - mean.derivative(order, x)),
    )
}
