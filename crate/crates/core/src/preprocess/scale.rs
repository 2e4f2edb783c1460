use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Min-max scaler. Values outside the fitted range map outside [0, 1]; no clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: f64,
    pub max: f64,
}

impl MinMaxScaler {
    pub fn fit(values: &[f64]) -> Result<MinMaxScaler> {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if !(max > min) {
            return Err(Error::invalid("min-max scaling needs max > min"));
        }
        Ok(MinMaxScaler { min, max })
    }

    /// Like [`fit`](Self::fit) but a constant (or empty) column gets unit span,
    /// so it maps to 0 instead of failing.
    pub fn fit_or_unit(values: &[f64]) -> MinMaxScaler {
        MinMaxScaler::fit(values).unwrap_or_else(|_| {
            let min = values.first().copied().unwrap_or(0.0);
            MinMaxScaler { min, max: min + 1.0 }
        })
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / self.span()
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.span() + self.min
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|x| self.apply(*x)).collect()
    }

    pub fn invert_all(&self, zs: &[f64]) -> Vec<f64> {
        zs.iter().map(|z| self.invert(*z)).collect()
    }
}
