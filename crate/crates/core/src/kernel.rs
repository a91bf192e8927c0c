//! Squared exponential kernel, polynomial mean functions, and exact evaluation
//! of all mixed partial derivatives of the kernel.
//!
//! The covariance between the `i`-th derivative of a field at `x` and the
//! `j`-th derivative at `x'` is `∂^{i+j} k / ∂x^i ∂x'^j`. For the squared
//! exponential kernel `k(x,x') = a² exp(−(x−x')²/(2l²))` this has a closed
//! form in terms of probabilists' Hermite polynomials: with `r = (x−x')/l`,
//!
//! ```text
//! ∂^{i+j} k / ∂x^i ∂x'^j = a² · (−1)^i · l^{−(i+j)} · He_{i+j}(r) · exp(−r²/2)
//! ```
//!
//! which follows from `d^m/dr^m exp(−r²/2) = (−1)^m He_m(r) exp(−r²/2)` and
//! the chain rule (each `∂/∂x` contributes a factor `1/l`, each `∂/∂x'` a
//! factor `−1/l`). Evaluation is exact up to rounding and costs `O(i+j)`.

use thiserror::Error;

/// Default Hermite table capacity: covers mixed derivatives up to order 8,
/// i.e. data containing derivatives up to order 4.
pub const DEFAULT_MAX_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel parameter `{name}` must be strictly positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("mixed derivative order {requested} exceeds the Hermite table capacity {capacity}")]
    OrderOverflow { requested: usize, capacity: usize },
}

/// Stationary kernel `k(x,x') = a² exp(−(x−x')²/(2l²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredExponentialKernel {
    amplitude: f64,
    length_scale: f64,
}

impl SquaredExponentialKernel {
    pub fn new(amplitude: f64, length_scale: f64) -> Result<Self, KernelError> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(KernelError::InvalidParameter {
                name: "amplitude",
                value: amplitude,
            });
        }
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(KernelError::InvalidParameter {
                name: "length_scale",
                value: length_scale,
            });
        }
        Ok(Self {
            amplitude,
            length_scale,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn evaluate(&self, x: f64, xp: f64) -> f64 {
        let r = (x - xp) / self.length_scale;
        self.amplitude * self.amplitude * (-0.5 * r * r).exp()
    }

    /// Prior variance of the order-th derivative field,
    /// `a²·(2q−1)!!/l^{2q}`: the coincident diagonal of the mixed derivative,
    /// available in closed form for any order since `He_{2q}(0)` is a signed
    /// double factorial. Bit-identical to `kernel_derivative(q, q, x, x)`
    /// where the table covers `2q`.
    pub fn derivative_prior_variance(&self, order: usize) -> f64 {
        let mut double_factorial = 1.0;
        let mut factor = 1.0;
        for _ in 0..order {
            double_factorial *= factor;
            factor += 2.0;
        }
        let scale = self.amplitude * self.amplitude * self.length_scale.powi(-(2 * order as i32));
        scale * double_factorial
    }
}

/// Polynomial mean function `m(x) = c₀ + c₁x + … + c_d x^d`.
///
/// An empty coefficient list is the zero mean. Derivatives of any order are
/// exact; orders above the degree are identically zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeanFunction {
    coefficients: Vec<f64>,
}

impl MeanFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Exact `i`-th derivative at `x`.
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        if self.coefficients.len() <= order {
            return 0.0;
        }
        // Horner on the differentiated coefficients c_k · k!/(k−i)!.
        let mut acc = 0.0;
        for k in (order..self.coefficients.len()).rev() {
            let mut falling = 1.0;
            for step in 0..order {
                falling *= (k - step) as f64;
            }
            acc = acc * x + self.coefficients[k] * falling;
        }
        acc
    }
}

/// Coefficients of the probabilists' Hermite polynomials `He₀ … He_M`,
/// ascending powers, built from `He_{m+1}(r) = r·He_m(r) − m·He_{m−1}(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    coefficients: Vec<Vec<f64>>,
}

impl HermiteTable {
    pub fn new(max_order: usize) -> Self {
        let mut coefficients = Vec::with_capacity(max_order + 1);
        coefficients.push(vec![1.0]);
        if max_order >= 1 {
            coefficients.push(vec![0.0, 1.0]);
        }
        for m in 1..max_order {
            let prev = &coefficients[m];
            let prev2 = &coefficients[m - 1];
            let mut next = vec![0.0; m + 2];
            for (degree, &c) in prev.iter().enumerate() {
                next[degree + 1] += c;
            }
            for (degree, &c) in prev2.iter().enumerate() {
                next[degree] -= m as f64 * c;
            }
            coefficients.push(next);
        }
        Self { coefficients }
    }

    pub fn max_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self, order: usize) -> Option<&[f64]> {
        self.coefficients.get(order).map(Vec::as_slice)
    }

    /// `He_m(r)` by Horner evaluation of the stored coefficients.
    pub fn evaluate(&self, order: usize, r: f64) -> Result<f64, KernelError> {
        let coeffs = self
            .coefficients
            .get(order)
            .ok_or(KernelError::OrderOverflow {
                requested: order,
                capacity: self.max_order(),
            })?;
        let mut acc = 0.0;
        for &c in coeffs.iter().rev() {
            acc = acc * r + c;
        }
        Ok(acc)
    }
}

impl Default for HermiteTable {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_ORDER)
    }
}

/// `∂^{i+j} k / ∂x^i ∂x'^j` at `(x, x')`, via the Hermite closed form.
///
/// Exactly symmetric: `kernel_derivative(i, j, x, x')` and
/// `kernel_derivative(j, i, x', x)` produce bit-identical results, since the
/// stored Hermite polynomials have pure parity and every sign flip involved
/// is exact in IEEE arithmetic.
pub fn kernel_derivative(
    kernel: &SquaredExponentialKernel,
    table: &HermiteTable,
    i: usize,
    j: usize,
    x: f64,
    xp: f64,
) -> Result<f64, KernelError> {
    let order = i + j;
    let r = (x - xp) / kernel.length_scale;
    let hermite = table.evaluate(order, r)?;
    let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let scale = kernel.amplitude * kernel.amplitude * kernel.length_scale.powi(-(order as i32));
    Ok(sign * scale * hermite * (-0.5 * r * r).exp())
}
