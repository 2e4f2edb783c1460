//! Level-stationarity KPSS test and differencing-order selection.

use serde::{Deserialize, Serialize};

/// 5% critical value of the level KPSS statistic.
pub const KPSS_CRITICAL_5PCT: f64 = 0.463;

/// Short Bartlett bandwidth floor(4 (n/100)^0.25).
pub fn kpss_lag(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

pub fn kpss_statistic(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let e: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut s = 0.0;
    let mut eta = 0.0;
    for v in &e {
        s += v;
        eta += s * s;
    }
    eta /= (n * n) as f64;
    let lag = kpss_lag(n).min(n - 1);
    let mut lrv = e.iter().map(|v| v * v).sum::<f64>() / n as f64;
    for l in 1..=lag {
        let w = 1.0 - l as f64 / (lag as f64 + 1.0);
        let cov: f64 = (l..n).map(|t| e[t] * e[t - l]).sum::<f64>() / n as f64;
        lrv += 2.0 * w * cov;
    }
    eta / lrv
}

pub fn kpss_rejects(x: &[f64]) -> bool {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let first = x[0];
    if x.iter().all(|v| (v - first).abs() <= 1e-12 * scale.max(1.0)) {
        return false;
    }
    kpss_statistic(x) > KPSS_CRITICAL_5PCT
}

pub fn difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Inverse of [`difference`] given the first value.
pub fn undifference(first: f64, dx: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(dx.len() + 1);
    out.push(first);
    let mut acc = first;
    for d in dx {
        acc += d;
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffTrace {
    pub d: usize,
    /// KPSS statistic at each tested order.
    pub statistics: Vec<f64>,
}

/// Differences until KPSS no longer rejects at 5%, capped at `max_d`.
pub fn select_d(x: &[f64], max_d: usize) -> DiffTrace {
    let mut cur = x.to_vec();
    let mut statistics = Vec::new();
    let mut d = 0;
    while d < max_d && cur.len() > 3 {
        let rejects = kpss_rejects(&cur);
        statistics.push(kpss_statistic(&cur));
        if !rejects {
            break;
        }
        cur = difference(&cur);
        d += 1;
    }
    DiffTrace { d, statistics }
}
