use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Multi-output linear model. Row 0 of `coefficients` is the intercept,
/// rows `1..=F` the feature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub lambda: f64,
    pub coefficients: Matrix,
}

/// Relative pivot size below which an unregularized system counts as
/// rank-deficient.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// Solves `min ||Xc W - Yc||^2 + lambda ||W||^2` on centered data, so the
/// intercept is not penalized. All outputs share one Cholesky factor.
pub fn fit_ridge(x: &Matrix, y: &Matrix, lambda: f64) -> Result<RidgeModel> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidModelSpec(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    let (n, f, m) = (x.rows(), x.cols(), y.cols());
    if n == 0 {
        return Err(Error::TooFewSamples { samples: 0, required: 1 });
    }
    if y.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.rows(),
        });
    }
    if x.as_slice().iter().chain(y.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in ridge training data".into()));
    }
    let x_mean = column_means(x);
    let y_mean = column_means(y);
    let xc = DMatrix::from_fn(n, f, |r, c| x.get(r, c) - x_mean[c]);
    let yc = DMatrix::from_fn(n, m, |r, c| y.get(r, c) - y_mean[c]);

    let mut gram = xc.tr_mul(&xc);
    let rhs = xc.tr_mul(&yc);
    let scale = (0..f).map(|i| gram[(i, i)]).fold(0.0_f64, f64::max);
    for i in 0..f {
        gram[(i, i)] += lambda;
    }
    let weights = if f == 0 {
        DMatrix::zeros(0, m)
    } else {
        let chol = gram.clone().cholesky().ok_or(Error::SingularSystem)?;
        if lambda == 0.0 {
            let l = chol.l_dirty();
            let min_pivot = (0..f).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if scale == 0.0 || min_pivot <= PIVOT_TOLERANCE * scale {
                return Err(Error::SingularSystem);
            }
        }
        chol.solve(&rhs)
    };

    let mut coefficients = Matrix::zeros(f + 1, m);
    for j in 0..m {
        let shift: f64 = (0..f).map(|i| x_mean[i] * weights[(i, j)]).sum();
        coefficients.set(0, j, y_mean[j] - shift);
        for i in 0..f {
            coefficients.set(i + 1, j, weights[(i, j)]);
        }
    }
    Ok(RidgeModel { lambda, coefficients })
}

fn column_means(m: &Matrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let n = m.rows().max(1) as f64;
    sums.into_iter().map(|s| s / n).collect()
}

impl RidgeModel {
    pub fn n_features(&self) -> usize {
        self.coefficients.rows() - 1
    }

    pub fn n_outputs(&self) -> usize {
        self.coefficients.cols()
    }

    pub fn intercept(&self) -> &[f64] {
        self.coefficients.row(0)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let (f, m) = (self.n_features(), self.n_outputs());
        if x.cols() != f {
            return Err(Error::DimensionMismatch {
                expected: f,
                actual: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), m);
        for (r, row) in x.iter_rows().enumerate() {
            let dst = out.row_mut(r);
            dst.copy_from_slice(self.coefficients.row(0));
            for (i, v) in row.iter().enumerate() {
                for (d, w) in dst.iter_mut().zip(self.coefficients.row(i + 1)) {
                    *d += v * w;
                }
            }
        }
        Ok(out)
    }
}
