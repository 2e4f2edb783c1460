//! Time-series regression and regression with ARIMA errors.

pub mod arima;
pub mod kpss;
pub mod ols;

use serde::{Deserialize, Serialize};

pub use arima::{auto_arima, fit_arma, ArimaFit, ArimaOrder, AutoArima, AutoArimaOptions};
pub use ols::{fit_ts_regression, forecast_linear, LinearModel, OlsOptions};

use crate::error::Result;
use crate::features::Design;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegArimaModel {
    pub regression: LinearModel,
    pub arima: ArimaFit,
    /// Regression residuals over the training span (the error history).
    pub residuals: Vec<f64>,
}

/// Regression first, then automatic ARIMA on its residuals.
pub fn fit_reg_arima(design: &Design, y: &[f64], opts: &AutoArimaOptions) -> Result<RegArimaModel> {
    let regression = fit_ts_regression(design, y)?;
    let residuals = regression.residuals(design, y)?;
    let arima = auto_arima(&residuals, opts)?.fit;
    Ok(RegArimaModel {
        regression,
        arima,
        residuals,
    })
}

/// Xb plus the iterated ARMA forecast of the error continuing `residual_history`.
pub fn forecast_reg_arima(model: &RegArimaModel, future: &Design, residual_history: &[f64]) -> Result<Vec<f64>> {
    let base = model.regression.predict(future)?;
    let eta = model.arima.forecast(residual_history, base.len())?;
    Ok(base.iter().zip(&eta).map(|(b, e)| b + e).collect())
}

impl RegArimaModel {
    pub fn forecast(&self, future: &Design) -> Result<Vec<f64>> {
        forecast_reg_arima(self, future, &self.residuals)
    }

    /// In-sample one-step errors of the combined model.
    pub fn one_step_errors(&self) -> Vec<f64> {
        self.arima.innovations(&self.residuals)
    }
}
