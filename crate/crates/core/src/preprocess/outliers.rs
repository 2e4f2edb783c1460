//! Outlier detection on periodic-STL remainders (3 IQR fence) and
//! replacement by the fitted trend + seasonal value.

use serde::{Deserialize, Serialize};

use super::stl::{stl_with, StlConfig, StlDecomposition};
use crate::error::Result;
use crate::series::{DailyClusterSeries, Variable, PERIOD};

pub const IQR_FENCE: f64 = 3.0;

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn flagged(dec: &StlDecomposition, y: &[f64]) -> Vec<usize> {
    let mut r = dec.remainder.clone();
    r.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&r, 0.25);
    let q3 = quantile_sorted(&r, 0.75);
    let iqr = q3 - q1;
    // Floating-point noise on an exactly decomposable series must not count.
    let tol = 1e-8 * y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = (q1 - IQR_FENCE * iqr - tol, q3 + IQR_FENCE * iqr + tol);
    dec.remainder
        .iter()
        .enumerate()
        .filter(|(_, r)| **r < lo || **r > hi)
        .map(|(i, _)| i)
        .collect()
}

/// Indices whose robust periodic-STL remainder falls outside
/// `[Q1 - 3 IQR, Q3 + 3 IQR]`.
pub fn detect_outliers(series: &[f64]) -> Result<Vec<usize>> {
    let dec = stl_with(series, &StlConfig::screening(PERIOD))?;
    Ok(flagged(&dec, series))
}

/// Replaces the given indices by trend + seasonal; other points are untouched.
pub fn replace_outliers(series: &[f64], indices: &[usize]) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Ok(series.to_vec());
    }
    let dec = stl_with(series, &StlConfig::screening(PERIOD))?;
    let mut out = series.to_vec();
    for &i in indices {
        out[i] = dec.trend[i] + dec.seasonal[i];
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// (variable name, replaced row indices)
    pub replaced: Vec<(String, Vec<usize>)>,
}

impl OutlierReport {
    pub fn total(&self) -> usize {
        self.replaced.iter().map(|(_, v)| v.len()).sum()
    }
}

/// Outlier pass over users, trans, demand and consumed of a contiguous series.
/// Replacements are floored at zero.
pub fn treat_outliers(series: &DailyClusterSeries) -> Result<(DailyClusterSeries, OutlierReport)> {
    let mut out = series.clone();
    let mut report = OutlierReport::default();
    if series.len() < 2 * PERIOD {
        return Ok((out, report));
    }
    for v in [Variable::Users, Variable::Trans, Variable::Demand, Variable::Consumed] {
        let col = series.column(v);
        let idx = detect_outliers(&col)?;
        if idx.is_empty() {
            continue;
        }
        let fixed = replace_outliers(&col, &idx)?;
        for &i in &idx {
            out.rows[i].set(v, fixed[i].max(0.0));
        }
        report.replaced.push((v.name().to_string(), idx));
    }
    Ok((out, report))
}
