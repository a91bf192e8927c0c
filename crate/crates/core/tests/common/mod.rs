//! Independent oracles for the acceptance suite.
//!
//! Everything here is assembled directly from the textbook formulas for the
//! squared exponential kernel and solved by LU decomposition — deliberately a
//! different code path from the library's Hermite evaluation and Cholesky
//! solves.

use nalgebra::{DMatrix, DVector};

/// `k(x,x') = a²·exp(−(x−x')²/(2l²))`, written out directly.
pub fn se_kernel(a: f64, l: f64, x: f64, xp: f64) -> f64 {
    let d = x - xp;
    a * a * (-d * d / (2.0 * l * l)).exp()
}

/// `∂k/∂x` from the product rule.
pub fn se_kernel_dx(a: f64, l: f64, x: f64, xp: f64) -> f64 {
    -(x - xp) / (l * l) * se_kernel(a, l, x, xp)
}

/// `∂k/∂x'`.
pub fn se_kernel_dxp(a: f64, l: f64, x: f64, xp: f64) -> f64 {
    (x - xp) / (l * l) * se_kernel(a, l, x, xp)
}

/// `∂²k/∂x∂x'`.
pub fn se_kernel_dx_dxp(a: f64, l: f64, x: f64, xp: f64) -> f64 {
    let d = x - xp;
    (1.0 / (l * l) - d * d / (l * l * l * l)) * se_kernel(a, l, x, xp)
}

pub struct OraclePosterior {
    pub mean: f64,
    pub variance: f64,
}

pub struct GpOracle {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    alpha: DVector<f64>,
    log_likelihood: f64,
    a: f64,
    l: f64,
    xs: Vec<f64>,
}

impl GpOracle {
    /// Textbook noiseless GP on order-0 data only.
    pub fn new(a: f64, l: f64, xs: &[f64], ys: &[f64]) -> Self {
        let p = xs.len();
        let gram = DMatrix::from_fn(p, p, |i, j| se_kernel(a, l, xs[i], xs[j]));
        let y = DVector::from_column_slice(ys);
        let lu = gram.lu();
        let alpha = lu.solve(&y).expect("oracle Gram is invertible");
        let log_det = lu.determinant().ln();
        let log_likelihood = -0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * log_det
            - 0.5 * y.dot(&alpha);
        Self {
            lu,
            alpha,
            log_likelihood,
            a,
            l,
            xs: xs.to_vec(),
        }
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn posterior(&self, query: f64) -> OraclePosterior {
        let p = self.xs.len();
        let kx = DVector::from_fn(p, |i, _| se_kernel(self.a, self.l, query, self.xs[i]));
        let mean = kx.dot(&self.alpha);
        let solved = self.lu.solve(&kx).expect("oracle Gram is invertible");
        let variance = se_kernel(self.a, self.l, query, query) - kx.dot(&solved);
        OraclePosterior { mean, variance }
    }
}

pub struct GekOracle {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    alpha: DVector<f64>,
    log_likelihood: f64,
    a: f64,
    l: f64,
    xs: Vec<f64>,
}

impl GekOracle {
    /// Gradient-enhanced kriging on shared locations: values and first
    /// derivatives, Gram blocks `[k, ∂k/∂x'; ∂k/∂x, ∂²k/∂x∂x']` written out
    /// by hand.
    pub fn new(a: f64, l: f64, xs: &[f64], ys: &[f64], dys: &[f64]) -> Self {
        let p = xs.len();
        let n = 2 * p;
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..p {
            for j in 0..p {
                gram[(i, j)] = se_kernel(a, l, xs[i], xs[j]);
                gram[(i, p + j)] = se_kernel_dxp(a, l, xs[i], xs[j]);
                gram[(p + i, j)] = se_kernel_dx(a, l, xs[i], xs[j]);
                gram[(p + i, p + j)] = se_kernel_dx_dxp(a, l, xs[i], xs[j]);
            }
        }
        let mut stacked = DVector::zeros(n);
        for i in 0..p {
            stacked[i] = ys[i];
            stacked[p + i] = dys[i];
        }
        let lu = gram.lu();
        let alpha = lu.solve(&stacked).expect("oracle Gram is invertible");
        let log_det = lu.determinant().ln();
        let log_likelihood = -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * log_det
            - 0.5 * stacked.dot(&alpha);
        Self {
            lu,
            alpha,
            log_likelihood,
            a,
            l,
            xs: xs.to_vec(),
        }
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Posterior of the value (`order` 0) or the derivative (`order` 1).
    pub fn posterior(&self, query: f64, order: usize) -> OraclePosterior {
        let p = self.xs.len();
        let mut kx = DVector::zeros(2 * p);
        for i in 0..p {
            match order {
                0 => {
                    kx[i] = se_kernel(self.a, self.l, query, self.xs[i]);
                    kx[p + i] = se_kernel_dxp(self.a, self.l, query, self.xs[i]);
                }
                1 => {
                    kx[i] = se_kernel_dx(self.a, self.l, query, self.xs[i]);
                    kx[p + i] = se_kernel_dx_dxp(self.a, self.l, query, self.xs[i]);
                }
                _ => panic!("oracle answers orders 0 and 1 only"),
            }
        }
        let prior = match order {
            0 => se_kernel(self.a, self.l, query, query),
            _ => self.a * self.a / (self.l * self.l),
        };
        let mean = kx.dot(&self.alpha);
        let solved = self.lu.solve(&kx).expect("oracle Gram is invertible");
        let variance = prior - kx.dot(&solved);
        OraclePosterior { mean, variance }
    }
}

/// Nested central finite differences of the kernel, Richardson-extrapolated
/// twice (overall O(h⁶) truncation).
pub fn fd_kernel_derivative(a: f64, l: f64, i: usize, j: usize, x: f64, xp: f64, h: f64) -> f64 {
    fn nested(a: f64, l: f64, i: usize, j: usize, x: f64, xp: f64, h: f64) -> f64 {
        if i > 0 {
            (nested(a, l, i - 1, j, x + h, xp, h) - nested(a, l, i - 1, j, x - h, xp, h))
                / (2.0 * h)
        } else if j > 0 {
            (nested(a, l, i, j - 1, x, xp + h, h) - nested(a, l, i, j - 1, x, xp - h, h))
                / (2.0 * h)
        } else {
            se_kernel(a, l, x, xp)
        }
    }
    let d1 = nested(a, l, i, j, x, xp, h);
    let d2 = nested(a, l, i, j, x, xp, h / 2.0);
    let d3 = nested(a, l, i, j, x, xp, h / 4.0);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in medians"));
    values[values.len() / 2]
}
