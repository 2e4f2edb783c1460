//! Additive STL decomposition (loess-based, after Cleveland et al. 1990).
//!
//! Positions are 1-based inside the loess helpers to keep the window
//! arithmetic identical to the reference Fortran.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeasonalWindow {
    /// Cycle-subseries are replaced by their (robustness-weighted) mean.
    Periodic,
    /// Loess span (odd, >= 3) used on each cycle-subseries.
    Span(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StlConfig {
    pub period: usize,
    pub seasonal: SeasonalWindow,
    pub seasonal_degree: usize,
    pub trend_window: usize,
    pub trend_degree: usize,
    pub lowpass_window: usize,
    pub lowpass_degree: usize,
    pub inner: usize,
    /// Robustness passes after the first fit.
    pub outer: usize,
    /// Keep running inner passes past `inner` until trend and seasonal stop
    /// changing (capped at [`MAX_INNER`]).
    pub converge_inner: bool,
    /// Periodic only: use the subseries median, not the mean, before any
    /// robustness weights exist.
    pub median_start: bool,
}

pub const MAX_INNER: usize = 200;

fn next_odd(x: f64) -> usize {
    let mut n = x.ceil() as usize;
    if n % 2 == 0 {
        n += 1;
    }
    n
}

impl StlConfig {
    /// Canonical defaults: seasonal degree 0, trend/low-pass degree 1,
    /// trend span = next odd >= 1.5 p / (1 - 1.5 / ns), low-pass span = next odd >= p,
    /// two inner passes and one robustness pass.
    pub fn new(period: usize, periodic: bool) -> StlConfig {
        let seasonal = if periodic {
            SeasonalWindow::Periodic
        } else {
            SeasonalWindow::Span(7)
        };
        let p = period as f64;
        let trend_window = match seasonal {
            SeasonalWindow::Periodic => next_odd(1.5 * p),
            SeasonalWindow::Span(ns) => next_odd(1.5 * p / (1.0 - 1.5 / ns as f64)),
        };
        StlConfig {
            period,
            seasonal,
            seasonal_degree: 0,
            trend_window,
            trend_degree: 1,
            lowpass_window: next_odd(p),
            lowpass_degree: 1,
            inner: 2,
            outer: 1,
            converge_inner: false,
            median_start: false,
        }
    }

    /// Periodic preset used by imputation and outlier screening: the inner
    /// loop is iterated to its fixed point and the unweighted pass uses
    /// subseries medians, so one large spike cannot shift a whole weekday.
    pub fn screening(period: usize) -> StlConfig {
        StlConfig {
            converge_inner: true,
            median_start: true,
            ..StlConfig::new(period, true)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StlDecomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub remainder: Vec<f64>,
    pub period: usize,
    pub periodic_seasonal: bool,
    /// Final robustness weights.
    pub weights: Vec<f64>,
}

impl StlDecomposition {
    pub fn fitted(&self) -> Vec<f64> {
        self.trend.iter().zip(&self.seasonal).map(|(t, s)| t + s).collect()
    }

    pub fn seasonally_adjusted(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.seasonal).map(|(y, s)| y - s).collect()
    }
}

/// STL with the canonical defaults for `period`.
pub fn stl(series: &[f64], period: usize, periodic: bool) -> Result<StlDecomposition> {
    stl_with(series, &StlConfig::new(period, periodic))
}

pub fn stl_with(y: &[f64], cfg: &StlConfig) -> Result<StlDecomposition> {
    let n = y.len();
    let np = cfg.period;
    if np < 2 {
        return Err(Error::invalid("STL period must be at least 2"));
    }
    if n < 2 * np {
        return Err(Error::invalid(format!(
            "STL needs at least {} points for period {np}, got {n}",
            2 * np
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("STL input contains missing or non-finite values"));
    }

    let mut trend = vec![0.0; n];
    let mut season = vec![0.0; n];
    let mut rw = vec![1.0; n];
    let mut use_rw = false;
    for pass in 0..=cfg.outer {
        inner_loop(y, cfg, use_rw.then_some(rw.as_slice()), &mut season, &mut trend);
        if pass == cfg.outer {
            break;
        }
        let resid: Vec<f64> = (0..n).map(|i| y[i] - trend[i] - season[i]).collect();
        rw = robustness_weights(&resid);
        use_rw = true;
    }

    let periodic = cfg.seasonal == SeasonalWindow::Periodic;
    if periodic {
        let mut sums = vec![0.0; np];
        let mut counts = vec![0usize; np];
        for (i, s) in season.iter().enumerate() {
            sums[i % np] += s;
            counts[i % np] += 1;
        }
        for (i, s) in season.iter_mut().enumerate() {
            *s = sums[i % np] / counts[i % np] as f64;
        }
    }
    let remainder = (0..n).map(|i| y[i] - trend[i] - season[i]).collect();
    Ok(StlDecomposition {
        trend,
        seasonal: season,
        remainder,
        period: np,
        periodic_seasonal: periodic,
        weights: if use_rw { rw } else { vec![1.0; n] },
    })
}

fn inner_loop(y: &[f64], cfg: &StlConfig, rw: Option<&[f64]>, season: &mut [f64], trend: &mut [f64]) {
    let n = y.len();
    let np = cfg.period;
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let max_iter = if cfg.converge_inner { MAX_INNER.max(cfg.inner) } else { cfg.inner };
    for it in 0..max_iter {
        let (prev_t, prev_s) = (trend.to_vec(), season.to_vec());
        let detrended: Vec<f64> = (0..n).map(|i| y[i] - trend[i]).collect();
        let cycle = cycle_subseries(&detrended, cfg, rw);
        let low = low_pass(&cycle, np);
        let low = ess(&low, None, cfg.lowpass_window, cfg.lowpass_degree);
        for i in 0..n {
            season[i] = cycle[np + i] - low[i];
        }
        let deseason: Vec<f64> = (0..n).map(|i| y[i] - season[i]).collect();
        let t = ess(&deseason, rw, cfg.trend_window, cfg.trend_degree);
        trend.copy_from_slice(&t);
        if it + 1 >= cfg.inner {
            let change = (0..n)
                .map(|i| (trend[i] - prev_t[i]).abs().max((season[i] - prev_s[i]).abs()))
                .fold(0.0, f64::max);
            if change <= 1e-14 * scale {
                break;
            }
        }
    }
}

/// Smooths each cycle-subseries and extends it one step on both sides,
/// giving a series of length `n + 2 * period`.
fn cycle_subseries(x: &[f64], cfg: &StlConfig, rw: Option<&[f64]>) -> Vec<f64> {
    let n = x.len();
    let np = cfg.period;
    let mut out = vec![0.0; n + 2 * np];
    for j in 0..np {
        let idx: Vec<usize> = (j..n).step_by(np).collect();
        let k = idx.len();
        let sub: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let sub_w: Option<Vec<f64>> = rw.map(|w| idx.iter().map(|&i| w[i]).collect());
        let mut smooth = vec![0.0; k + 2];
        match cfg.seasonal {
            SeasonalWindow::Periodic if rw.is_none() && cfg.median_start => {
                let mut sorted = sub.clone();
                sorted.sort_by(f64::total_cmp);
                let med = if k % 2 == 1 {
                    sorted[k / 2]
                } else {
                    0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
                };
                smooth.iter_mut().for_each(|s| *s = med);
            }
            SeasonalWindow::Periodic => {
                let (num, den) = sub.iter().enumerate().fold((0.0, 0.0), |(a, b), (m, v)| {
                    let w = sub_w.as_ref().map_or(1.0, |w| w[m]);
                    (a + w * v, b + w)
                });
                let mean = if den > 0.0 {
                    num / den
                } else {
                    sub.iter().sum::<f64>() / k as f64
                };
                smooth.iter_mut().for_each(|s| *s = mean);
            }
            SeasonalWindow::Span(ns) => {
                let w = sub_w.as_deref();
                let fit = ess(&sub, w, ns, cfg.seasonal_degree);
                smooth[1..=k].copy_from_slice(&fit);
                let nright = ns.min(k);
                smooth[0] = est(&sub, w, ns, cfg.seasonal_degree, 0.0, 1, nright).unwrap_or(smooth[1]);
                let nleft = if k >= ns { k - ns + 1 } else { 1 };
                smooth[k + 1] =
                    est(&sub, w, ns, cfg.seasonal_degree, (k + 1) as f64, nleft, k).unwrap_or(smooth[k]);
            }
        }
        for (m, v) in smooth.into_iter().enumerate() {
            out[m * np + j] = v;
        }
    }
    out
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1 - len);
    let mut acc: f64 = x[..len].iter().sum();
    out.push(acc / len as f64);
    for i in len..x.len() {
        acc += x[i] - x[i - len];
        out.push(acc / len as f64);
    }
    out
}

/// MA(p) . MA(p) . MA(3): maps length n + 2p to n.
fn low_pass(x: &[f64], np: usize) -> Vec<f64> {
    moving_average(&moving_average(&moving_average(x, np), np), 3)
}

/// Loess smoothing evaluated at every position.
fn ess(y: &[f64], rw: Option<&[f64]>, len: usize, degree: usize) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return y.to_vec();
    }
    let mut out = vec![0.0; n];
    if len >= n {
        for i in 1..=n {
            out[i - 1] = est(y, rw, len, degree, i as f64, 1, n).unwrap_or_else(|| widened(y, rw, len, degree, i));
        }
    } else {
        let nsh = len.div_ceil(2);
        let (mut nleft, mut nright) = (1, len);
        for i in 1..=n {
            if i > nsh && nright != n {
                nleft += 1;
                nright += 1;
            }
            out[i - 1] =
                est(y, rw, len, degree, i as f64, nleft, nright).unwrap_or_else(|| widened(y, rw, len, degree, i));
        }
    }
    out
}

/// Fallback when every robustness weight in the window is zero: grow the
/// window around position `i` until some weighted support exists.
fn widened(y: &[f64], rw: Option<&[f64]>, len: usize, degree: usize, i: usize) -> f64 {
    let n = y.len();
    let mut span = len;
    while rw.is_some() && span < 2 * n {
        span += 2;
        let half = span / 2;
        let nleft = i.saturating_sub(half).max(1);
        let nright = (i + half).min(n);
        if let Some(v) = est(y, rw, span, degree, i as f64, nleft, nright) {
            return v;
        }
    }
    y[i - 1]
}

/// Local (degree 0 or 1) tricube-weighted fit at abscissa `xs` over the
/// 1-based window `nleft..=nright`.
fn est(y: &[f64], rw: Option<&[f64]>, len: usize, degree: usize, xs: f64, nleft: usize, nright: usize) -> Option<f64> {
    let n = y.len();
    let range = n as f64 - 1.0;
    let mut h = (xs - nleft as f64).max(nright as f64 - xs);
    if len > n {
        h += ((len - n) / 2) as f64;
    }
    let h9 = 0.999 * h;
    let h1 = 0.001 * h;

    let mut w = vec![0.0; nright - nleft + 1];
    let mut total = 0.0;
    for (slot, j) in (nleft..=nright).enumerate() {
        let r = (j as f64 - xs).abs();
        if r <= h9 {
            let mut wj = if r <= h1 { 1.0 } else { (1.0 - (r / h).powi(3)).powi(3) };
            if let Some(rw) = rw {
                wj *= rw[j - 1];
            }
            w[slot] = wj;
            total += wj;
        }
    }
    if total <= 0.0 {
        return None;
    }
    // A local line needs two supporting points once robustness weights can
    // switch neighbours off.
    if rw.is_some() && w.iter().filter(|v| **v > 0.0).count() <= degree {
        return None;
    }
    w.iter_mut().for_each(|v| *v /= total);

    if h > 0.0 && degree > 0 {
        let a: f64 = (nleft..=nright).zip(&w).map(|(j, wj)| wj * j as f64).sum();
        let c: f64 = (nleft..=nright).zip(&w).map(|(j, wj)| wj * (j as f64 - a).powi(2)).sum();
        if c.sqrt() > 0.001 * range {
            let b = (xs - a) / c;
            for (j, wj) in (nleft..=nright).zip(w.iter_mut()) {
                *wj *= b * (j as f64 - a) + 1.0;
            }
        }
    }
    Some((nleft..=nright).zip(&w).map(|(j, wj)| wj * y[j - 1]).sum())
}

fn robustness_weights(resid: &[f64]) -> Vec<f64> {
    let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n % 2 == 1 {
        abs[n / 2]
    } else {
        0.5 * (abs[n / 2 - 1] + abs[n / 2])
    };
    let cmad = 6.0 * median;
    let (c9, c1) = (0.999 * cmad, 0.001 * cmad);
    resid
        .iter()
        .map(|r| {
            let r = r.abs();
            if r <= c1 {
                1.0
            } else if r <= c9 {
                (1.0 - (r / cmad).powi(2)).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sinusoid(n: usize) -> (Vec<f64>, Vec<f64>) {
        let y = (0..n).map(|t| 0.5 * t as f64 + 10.0 * (2.0 * PI * t as f64 / 7.0).sin()).collect();
        let s = (0..n).map(|t| 10.0 * (2.0 * PI * t as f64 / 7.0).sin()).collect();
        (y, s)
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn default_windows() {
        let c = StlConfig::new(7, false);
        // 1.5 * 7 / (1 - 1.5 / 7) = 13.36 -> 15
        assert_eq!(c.trend_window, 15);
        assert_eq!(c.lowpass_window, 7);
        assert_eq!(StlConfig::new(7, true).trend_window, 11);
    }

    #[test]
    fn constant_series() {
        for periodic in [true, false] {
            let d = stl(&[4.2; 35], 7, periodic).unwrap();
            for i in 0..35 {
                assert!((d.trend[i] - 4.2).abs() < 1e-9);
                assert!(d.seasonal[i].abs() < 1e-9);
                assert!(d.remainder[i].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn recovers_sinusoid() {
        let (y, s) = sinusoid(140);
        for periodic in [true, false] {
            let d = stl(&y, 7, periodic).unwrap();
            assert!(corr(&d.seasonal, &s) >= 0.99);
            let rms = (d.remainder.iter().map(|r| r * r).sum::<f64>() / 140.0).sqrt();
            assert!(rms <= 0.05 * 10.0, "rms {rms}");
            for i in 0..140 {
                assert!((d.trend[i] + d.seasonal[i] + d.remainder[i] - y[i]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sawtooth_decomposes_around_mean() {
        let tooth = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y: Vec<f64> = (0..70).map(|t| tooth[t % 7]).collect();
        let d = stl(&y, 7, true).unwrap();
        for t in 0..70 {
            assert!((d.trend[t] - 3.0).abs() < 1e-9);
            assert!((d.seasonal[t] - (tooth[t % 7] - 3.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn periodic_seasonal_constant_per_position() {
        let (mut y, _) = sinusoid(91);
        y[40] += 25.0;
        let d = stl(&y, 7, true).unwrap();
        for i in 7..91 {
            assert_eq!(d.seasonal[i], d.seasonal[i - 7]);
        }
    }

    #[test]
    fn too_short_errors() {
        assert!(stl(&[1.0; 13], 7, true).is_err());
        assert!(stl(&[1.0; 14], 7, true).is_ok());
    }
}
