use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Design;

pub const RIDGE_LAMBDA: f64 = 1e-8;
/// |R_jj| below this fraction of max |R_ii| counts as rank deficiency.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub columns: Vec<String>,
    /// True when the ridge fallback produced the coefficients.
    pub ridge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsOptions {
    pub ridge_fallback: bool,
}

impl Default for OlsOptions {
    fn default() -> Self {
        OlsOptions { ridge_fallback: true }
    }
}

fn with_intercept(design: &Design) -> DMatrix<f64> {
    let (n, p) = (design.n_rows(), design.n_cols());
    DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { design.rows[i][j - 1] })
}

pub fn fit_ts_regression(design: &Design, y: &[f64]) -> Result<LinearModel> {
    fit_ts_regression_with(design, y, OlsOptions::default())
}

/// Least squares with intercept via Householder QR; falls back to a ridge
/// solve (intercept unpenalised) when the design is rank deficient.
pub fn fit_ts_regression_with(design: &Design, y: &[f64], opts: OlsOptions) -> Result<LinearModel> {
    let n = design.n_rows();
    let p = design.n_cols() + 1;
    if y.len() != n {
        return Err(Error::invalid(format!("design has {n} rows but target has {}", y.len())));
    }
    if n <= p {
        return Err(Error::invalid(format!("regression needs more rows ({n}) than columns ({p})")));
    }
    if y.iter().any(|v| !v.is_finite()) || design.rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("regression inputs contain non-finite values"));
    }
    let x = with_intercept(design);
    let yv = DVector::from_column_slice(y);

    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let full_rank = diag_max > 0.0 && (0..p).all(|i| r[(i, i)].abs() > RANK_TOL * diag_max);

    let (beta, ridge) = if full_rank {
        let qty = qr.q().transpose() * &yv;
        let beta = r
            .solve_upper_triangular(&qty)
            .ok_or_else(|| Error::numeric("triangular solve failed"))?;
        (beta, false)
    } else {
        if !opts.ridge_fallback {
            return Err(Error::numeric("design matrix is rank deficient"));
        }
        let mut xtx = x.transpose() * &x;
        for i in 1..p {
            xtx[(i, i)] += RIDGE_LAMBDA;
        }
        let xty = x.transpose() * &yv;
        let chol = xtx
            .cholesky()
            .ok_or_else(|| Error::numeric("ridge system is not positive definite"))?;
        (chol.solve(&xty), true)
    };

    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        columns: design.columns.clone(),
        ridge,
    })
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn predict(&self, design: &Design) -> Result<Vec<f64>> {
        design.check_columns(&self.columns)?;
        Ok(design.rows.iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn residuals(&self, design: &Design, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict(design)?.iter().zip(y).map(|(f, y)| y - f).collect())
    }
}

/// Pure regression forecast.
pub fn forecast_linear(model: &LinearModel, future: &Design) -> Result<Vec<f64>> {
    model.predict(future)
}
