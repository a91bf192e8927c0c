//! Regression over a scalar function and its derivatives of arbitrary order.
//!
//! Observations of the observable and of any of its derivatives — at
//! arbitrary, possibly disjoint, possibly noisy locations — are fused into
//! one augmented Gaussian random field indexed by `(location, derivative
//! order)`. The field's covariance between orders `i` and `j` is the mixed
//! partial `∂^{i+j}k/∂xⁱ∂x'ʲ` of the base kernel, evaluated in closed form,
//! which yields exact posterior means and variances for any derivative order
//! at any query point.
//!
//! Module map:
//!
//! * [`kernel`] — squared exponential kernel, polynomial means, and the
//!   Hermite-polynomial engine for mixed kernel derivatives;
//! * [`field`] — observation sets and block Gram/cross-covariance assembly;
//! * [`inference`] — posterior prediction, log-likelihood, and
//!   maximum-likelihood fitting (noiseless and noisy, per-order noise);
//! * [`datagen`] — benchmark truth functions, pseudo-spectral KdV/Burgers
//!   solvers, observation sampling, and the relative L2 error metric;
//! * [`io`] — CSV/config/model file formats, the CLI command layer, and the
//!   experiment reproduction driver.

pub mod datagen;
pub mod field;
pub mod inference;
pub mod io;
pub mod kernel;

pub use field::{Hyperparameters, JitterPolicy, ObservationSet, QuerySpec};
pub use inference::{fit, log_likelihood, FitConfig, FittedModel, NoiseMode, Prediction};
pub use kernel::{HermiteTable, MeanFunction, SquaredExponentialKernel};
