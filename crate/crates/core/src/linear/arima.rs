//! ARIMA(p,d,q) errors with automatic order selection.
//!
//! Order search follows Hyndman & Khandakar (2008): d by repeated KPSS tests,
//! then a stepwise AICc search over (p, q, constant). Parameters come from a
//! conditional-sum-of-squares fit refined by exact Gaussian likelihood
//! (Kalman filter). AR and MA polynomials are kept stationary/invertible by
//! optimising over tanh-transformed partial autocorrelations.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kpss::{difference, select_d, DiffTrace};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

pub const MIN_ARIMA_POINTS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    /// Mean of the differenced series (drift when d = 1), if included.
    pub include_mean: bool,
    pub mean: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub loglik: Option<f64>,
    pub aicc: Option<f64>,
    /// False if the optimiser hit its evaluation cap.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoArimaOptions {
    pub max_p: usize,
    pub max_q: usize,
    pub max_d: usize,
    /// Refine the CSS estimates by exact maximum likelihood.
    pub ml_refine: bool,
}

impl Default for AutoArimaOptions {
    fn default() -> Self {
        AutoArimaOptions {
            max_p: 5,
            max_q: 5,
            max_d: 2,
            ml_refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub p: usize,
    pub q: usize,
    pub constant: bool,
    pub aicc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoArima {
    pub fit: ArimaFit,
    pub differencing: DiffTrace,
    /// Models accepted along the stepwise path, in order.
    pub path: Vec<Candidate>,
    /// Every model evaluated.
    pub evaluated: Vec<Candidate>,
}

/// Durbin-Levinson map from partial autocorrelations to AR coefficients.
fn pacf_to_coef(u: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(u.len());
    for (k, uk) in u.iter().enumerate() {
        let r = uk.tanh();
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

struct Layout {
    p: usize,
    q: usize,
    mean: bool,
    centre: f64,
    spread: f64,
}

impl Layout {
    fn dim(&self) -> usize {
        self.p + self.q + self.mean as usize
    }

    fn unpack(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let ar = pacf_to_coef(&u[..self.p]);
        let ma = pacf_to_coef(&u[self.p..self.p + self.q]).into_iter().map(|c| -c).collect();
        let mu = if self.mean {
            self.centre + self.spread * u[self.p + self.q]
        } else {
            0.0
        };
        (ar, ma, mu)
    }
}

/// Conditional residuals: the first p are conditioned on (set to zero).
pub fn css_residuals(w: &[f64], ar: &[f64], ma: &[f64], mu: f64) -> Vec<f64> {
    let p = ar.len();
    let mut e = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = mu;
        for (i, a) in ar.iter().enumerate() {
            pred += a * (w[t - 1 - i] - mu);
        }
        for (j, b) in ma.iter().enumerate() {
            if t > j {
                pred += b * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

fn css_sse(w: &[f64], ar: &[f64], ma: &[f64], mu: f64) -> f64 {
    css_residuals(w, ar, ma, mu)[ar.len()..].iter().map(|e| e * e).sum()
}

/// Sum of squared standardised innovations and sum of log prediction
/// variances from the exact Kalman filter (unit innovation variance).
fn kalman_terms(w: &[f64], ar: &[f64], ma: &[f64], mu: f64) -> Option<(f64, f64)> {
    let r = ar.len().max(ma.len() + 1);
    let phi = |i: usize| if i < ar.len() { ar[i] } else { 0.0 };
    let rvec: Vec<f64> = (0..r).map(|i| if i == 0 { 1.0 } else if i - 1 < ma.len() { ma[i - 1] } else { 0.0 }).collect();

    // Stationary state covariance: vec(P) = (I - T (x) T)^-1 vec(R R').
    let t = DMatrix::from_fn(r, r, |i, j| if j == 0 { phi(i) } else if j == i + 1 { 1.0 } else { 0.0 });
    let lhs = DMatrix::identity(r * r, r * r) - t.kronecker(&t);
    let rhs = DVector::from_fn(r * r, |k, _| rvec[k % r] * rvec[k / r]);
    let vecp = lhs.lu().solve(&rhs)?;
    let mut p: Vec<f64> = (0..r * r).map(|k| vecp[(k % r) * r + k / r]).collect();
    let mut a = vec![0.0; r];
    let mut m = vec![0.0; r * r];

    let (mut ssq, mut sum_log_f) = (0.0, 0.0);
    for &y in w {
        let v = y - mu - a[0];
        let f = p[0];
        if !(f > 0.0) || !f.is_finite() {
            return None;
        }
        ssq += v * v / f;
        sum_log_f += f.ln();
        // Update with Z = e1.
        let k: Vec<f64> = (0..r).map(|i| p[i * r] / f).collect();
        let row0: Vec<f64> = p[..r].to_vec();
        for i in 0..r {
            a[i] += k[i] * v;
            for j in 0..r {
                p[i * r + j] -= k[i] * row0[j];
            }
        }
        // Predict: a <- T a, P <- T P T' + R R'.
        let a0 = a[0];
        for i in 0..r {
            a[i] = phi(i) * a0 + if i + 1 < r { a[i + 1] } else { 0.0 };
        }
        for i in 0..r {
            for j in 0..r {
                m[i * r + j] = phi(i) * p[j] + if i + 1 < r { p[(i + 1) * r + j] } else { 0.0 };
            }
        }
        for i in 0..r {
            for j in 0..r {
                p[i * r + j] = m[i * r] * phi(j) + if j + 1 < r { m[i * r + j + 1] } else { 0.0 } + rvec[i] * rvec[j];
            }
        }
    }
    Some((ssq, sum_log_f))
}

/// Candidates with a root this close to the unit circle are discarded.
pub const MIN_ROOT_MODULUS: f64 = 1.01;

/// Smallest root modulus of 1 - c1 z - ... - ck z^k (infinite when k = 0).
fn min_root_modulus(c: &[f64]) -> f64 {
    let k = c.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1);
    if k == 0 {
        return f64::INFINITY;
    }
    let m = DMatrix::from_fn(k, k, |i, j| if i == 0 { c[j] } else if j + 1 == i { 1.0 } else { 0.0 });
    let largest = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    1.0 / largest
}

fn aicc(loglik: f64, k: usize, n: usize) -> Option<f64> {
    if n <= k + 1 {
        return None;
    }
    let aic = -2.0 * loglik + 2.0 * k as f64;
    Some(aic + 2.0 * (k * (k + 1)) as f64 / (n - k - 1) as f64)
}

fn std_dev(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    let m = w.iter().sum::<f64>() / n;
    (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Fits ARMA(p, q) (plus optional mean) to an already differenced series.
pub fn fit_arma(w: &[f64], order: ArimaOrder, include_mean: bool, ml_refine: bool) -> Option<ArimaFit> {
    let (p, q) = (order.p, order.q);
    let n = w.len();
    if n <= p + q + include_mean as usize + 2 {
        return None;
    }
    let spread = std_dev(w).max(1e-12);
    let lay = Layout {
        p,
        q,
        mean: include_mean,
        centre: w.iter().sum::<f64>() / n as f64,
        spread,
    };
    let dim = lay.dim();
    let opts = NelderMeadOptions {
        initial_step: 0.1,
        max_evals: 300 + 300 * dim,
        ..Default::default()
    };
    let n_eff = (n - p) as f64;
    let css_obj = |u: &[f64]| {
        let (ar, ma, mu) = lay.unpack(u);
        let sse = css_sse(w, &ar, &ma, mu);
        0.5 * n_eff * (sse / n_eff).ln()
    };

    let starts: Vec<Vec<f64>> = vec![
        vec![0.0; dim],
        (0..dim).map(|i| if i < p + q { 0.3 } else { 0.0 }).collect(),
        (0..dim).map(|i| if i < p + q { if i % 2 == 0 { -0.3 } else { 0.3 } } else { 0.0 }).collect(),
    ];
    let mut best = nelder_mead(css_obj, &starts[0], &opts);
    if dim > 0 {
        for s in &starts[1..] {
            let m = nelder_mead(css_obj, s, &opts);
            if m.value < best.value {
                best = m;
            }
        }
    }
    if !best.value.is_finite() {
        return None;
    }

    let (u, loglik, sigma2, nobs, converged) = if ml_refine {
        let nf = n as f64;
        let ml_obj = |u: &[f64]| {
            let (ar, ma, mu) = lay.unpack(u);
            match kalman_terms(w, &ar, &ma, mu) {
                Some((ssq, slf)) => 0.5 * (nf * (ssq / nf).ln() + slf),
                None => f64::INFINITY,
            }
        };
        let x0 = if best.x.is_empty() { vec![] } else { best.x.clone() };
        let ml = nelder_mead(ml_obj, &x0, &opts);
        let (ar, ma, mu) = lay.unpack(&ml.x);
        let (ssq, slf) = kalman_terms(w, &ar, &ma, mu)?;
        let s2 = ssq / nf;
        let ll = -0.5 * (nf * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0) + slf);
        (ml.x, ll, s2, n, ml.converged && best.converged)
    } else {
        let (ar, ma, mu) = lay.unpack(&best.x);
        let s2 = css_sse(w, &ar, &ma, mu) / n_eff;
        let ll = -0.5 * n_eff * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0);
        (best.x.clone(), ll, s2, n - p, best.converged)
    };
    if !loglik.is_finite() {
        return None;
    }
    let (ar, ma, mean) = lay.unpack(&u);
    let neg_ma: Vec<f64> = ma.iter().map(|t| -t).collect();
    if min_root_modulus(&ar) < MIN_ROOT_MODULUS || min_root_modulus(&neg_ma) < MIN_ROOT_MODULUS {
        return None;
    }
    let k = dim + 1;
    Some(ArimaFit {
        order,
        include_mean,
        mean,
        ar,
        ma,
        sigma2,
        loglik: Some(loglik),
        aicc: aicc(loglik, k, nobs),
        converged,
    })
}

fn degenerate(d: usize) -> ArimaFit {
    ArimaFit {
        order: ArimaOrder { p: 0, d, q: 0 },
        include_mean: false,
        mean: 0.0,
        ar: vec![],
        ma: vec![],
        sigma2: 0.0,
        loglik: None,
        aicc: None,
        converged: true,
    }
}

fn key(c: &Candidate) -> (f64, usize, usize, bool) {
    (c.aicc.unwrap_or(f64::INFINITY), c.p + c.q, c.p, c.constant)
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    let (ka, kb) = (key(a), key(b));
    ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(ka.2.cmp(&kb.2)).then(ka.3.cmp(&kb.3)).is_lt()
}

/// Hyndman-Khandakar automatic ARIMA on a residual series.
pub fn auto_arima(x: &[f64], opts: &AutoArimaOptions) -> Result<AutoArima> {
    if x.len() < MIN_ARIMA_POINTS {
        return Err(Error::invalid(format!(
            "auto-ARIMA needs at least {MIN_ARIMA_POINTS} points, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("auto-ARIMA input contains non-finite values"));
    }
    let differencing = select_d(x, opts.max_d);
    let d = differencing.d;
    let mut w = x.to_vec();
    for _ in 0..d {
        w = difference(&w);
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if std_dev(&w) <= 1e-10 * scale.max(1e-300) || scale == 0.0 {
        return Ok(AutoArima {
            fit: degenerate(d),
            differencing,
            path: vec![],
            evaluated: vec![],
        });
    }

    let allow_const = d <= 1;
    let mut cache: BTreeMap<(usize, usize, bool), Option<ArimaFit>> = BTreeMap::new();
    let mut evaluated: Vec<Candidate> = Vec::new();
    let mut evaluate = |specs: Vec<(usize, usize, bool)>, cache: &mut BTreeMap<_, Option<ArimaFit>>| -> Vec<Candidate> {
        let fresh: Vec<(usize, usize, bool)> = specs.iter().filter(|s| !cache.contains_key(*s)).copied().collect();
        let fits: Vec<Option<ArimaFit>> = fresh
            .par_iter()
            .map(|&(p, q, c)| fit_arma(&w, ArimaOrder { p, d, q }, c, opts.ml_refine))
            .collect();
        for (s, f) in fresh.iter().zip(fits) {
            evaluated.push(Candidate {
                p: s.0,
                q: s.1,
                constant: s.2,
                aicc: f.as_ref().and_then(|f| f.aicc),
            });
            cache.insert(*s, f);
        }
        specs
            .iter()
            .map(|s| Candidate {
                p: s.0,
                q: s.1,
                constant: s.2,
                aicc: cache[s].as_ref().and_then(|f| f.aicc),
            })
            .collect()
    };

    let starts = [(2, 2), (0, 0), (1, 0), (0, 1)]
        .into_iter()
        .filter(|(p, q)| *p <= opts.max_p && *q <= opts.max_q)
        .map(|(p, q)| (p, q, allow_const))
        .collect();
    let mut best: Option<Candidate> = None;
    for c in evaluate(starts, &mut cache) {
        if c.aicc.is_some() && best.as_ref().is_none_or(|b| better(&c, b)) {
            best = Some(c);
        }
    }
    let mut best = best.ok_or_else(|| {
        Error::numeric(format!("ARIMA fitting failed for every starting model (d = {d}, n = {})", w.len()))
    })?;
    let mut path = vec![best.clone()];

    loop {
        let (p, q) = (best.p as i64, best.q as i64);
        let mut specs = Vec::new();
        for (dp, dq) in [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
            let (np, nq) = (p + dp, q + dq);
            if np >= 0 && nq >= 0 && np as usize <= opts.max_p && nq as usize <= opts.max_q {
                specs.push((np as usize, nq as usize, best.constant));
            }
        }
        if allow_const {
            specs.push((best.p, best.q, !best.constant));
        }
        let mut next: Option<Candidate> = None;
        for c in evaluate(specs, &mut cache) {
            if c.aicc.is_some() && better(&c, &best) && next.as_ref().is_none_or(|n| better(&c, n)) {
                next = Some(c);
            }
        }
        match next {
            Some(c) => {
                best = c.clone();
                path.push(c);
            }
            None => break,
        }
    }

    let fit = cache[&(best.p, best.q, best.constant)].clone().expect("best model was fitted");
    Ok(AutoArima {
        fit,
        differencing,
        path,
        evaluated,
    })
}

impl ArimaFit {
    fn differenced(&self, history: &[f64]) -> Vec<f64> {
        let mut w = history.to_vec();
        for _ in 0..self.order.d {
            w = difference(&w);
        }
        w
    }

    /// One-step in-sample innovations of the differenced history.
    pub fn innovations(&self, history: &[f64]) -> Vec<f64> {
        let w = self.differenced(history);
        css_residuals(&w, &self.ar, &self.ma, self.mean)
    }

    /// Iterated `h`-step forecast of the series following `history`.
    pub fn forecast(&self, history: &[f64], h: usize) -> Result<Vec<f64>> {
        let d = self.order.d;
        if history.len() <= d + self.ar.len() {
            return Err(Error::invalid("residual history too short for the ARIMA order"));
        }
        // Last value of each differencing level, for re-integration.
        let mut levels = Vec::with_capacity(d);
        let mut cur = history.to_vec();
        for _ in 0..d {
            levels.push(*cur.last().unwrap());
            cur = difference(&cur);
        }
        let mut w = cur;
        let mut e = css_residuals(&w, &self.ar, &self.ma, self.mean);
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let t = w.len();
            let mut pred = self.mean;
            for (i, a) in self.ar.iter().enumerate() {
                pred += a * (w[t - 1 - i] - self.mean);
            }
            for (j, b) in self.ma.iter().enumerate() {
                if t > j {
                    pred += b * e[t - 1 - j];
                }
            }
            w.push(pred);
            e.push(0.0);
            let mut v = pred;
            for lvl in levels.iter_mut().rev() {
                v += *lvl;
                *lvl = v;
            }
            out.push(v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = crate::seed::rng(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let e = noise(seed, n + 100);
        let mut x = vec![0.0; n + 100];
        for t in 1..n + 100 {
            x[t] = phi * x[t - 1] + e[t];
        }
        x[100..].to_vec()
    }

    #[test]
    fn pacf_transform_is_stationary() {
        let phi = pacf_to_coef(&[0.5]);
        assert!((phi[0] - 0.5f64.tanh()).abs() < 1e-15);
        let phi = pacf_to_coef(&[3.0, -3.0, 2.0]);
        // Companion-matrix spectral radius < 1.
        let m = DMatrix::from_fn(3, 3, |i, j| if i == 0 { phi[j] } else if j + 1 == i { 1.0 } else { 0.0 });
        let radius = m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(radius < 1.0);
    }

    #[test]
    fn root_modulus() {
        assert_eq!(min_root_modulus(&[]), f64::INFINITY);
        assert!((min_root_modulus(&[0.5]) - 2.0).abs() < 1e-12);
        // 1 - 0.25 z^2 has roots +-2
        assert!((min_root_modulus(&[0.0, 0.25]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kalman_white_noise_is_plain_sum() {
        let w = [1.0, -2.0, 0.5];
        let (ssq, slf) = kalman_terms(&w, &[], &[], 0.0).unwrap();
        assert!((ssq - 5.25).abs() < 1e-12);
        assert!(slf.abs() < 1e-12);
    }

    #[test]
    fn kalman_ar1_exact_likelihood() {
        // AR(1): first prediction variance 1/(1-phi^2), then 1.
        let phi = 0.6;
        let w = [1.0, 0.2, -0.4];
        let (ssq, slf) = kalman_terms(&w, &[phi], &[], 0.0).unwrap();
        let v0 = 1.0 / (1.0 - phi * phi);
        let expect = 1.0 / v0 + (0.2 - phi).powi(2) + (-0.4 - phi * 0.2f64).powi(2);
        assert!((ssq - expect).abs() < 1e-12);
        assert!((slf - v0.ln()).abs() < 1e-12);
    }

    fn best_white_noise_aicc(x: &[f64]) -> f64 {
        [false, true]
            .iter()
            .map(|c| fit_arma(x, ArimaOrder { p: 0, d: 0, q: 0 }, *c, true).unwrap().aicc.unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn white_noise_selects_near_000() {
        // Sampling property: checked as a rate over seeds.
        let (mut d0, mut near) = (0, 0);
        for seed in 0..20 {
            let x = noise(seed, 500);
            let res = auto_arima(&x, &AutoArimaOptions::default()).unwrap();
            d0 += (res.fit.order.d == 0) as usize;
            near += (best_white_noise_aicc(&x) - res.fit.aicc.unwrap() <= 2.0) as usize;
        }
        assert!(d0 >= 18, "d = 0 in {d0}/20");
        assert!(near >= 14, "within 2 AICc in {near}/20");
    }

    #[test]
    fn ar1_recovered() {
        let x = ar1(1, 500, 0.8);
        let res = auto_arima(&x, &AutoArimaOptions::default()).unwrap();
        assert_eq!(res.fit.order.d, 0);
        assert!(res.fit.order.p >= 1);
        assert!((0.7..=0.9).contains(&res.fit.ar[0]), "{:?}", res.fit);
        // Grid-search CSS oracle for the AR(1) coefficient.
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let grid_best = (0..=2000)
            .map(|i| -0.999 + i as f64 * 0.000999)
            .min_by(|a, b| css_sse(&x, &[*a], &[], mean).total_cmp(&css_sse(&x, &[*b], &[], mean)))
            .unwrap();
        let fit = fit_arma(&x, ArimaOrder { p: 1, d: 0, q: 0 }, true, false).unwrap();
        assert!((fit.ar[0] - grid_best).abs() < 0.01, "{} vs {}", fit.ar[0], grid_best);
    }

    #[test]
    fn ar1_rate_over_seeds() {
        // KPSS at the short bandwidth over-rejects for phi = 0.8, so d = 0 is
        // only typical; when an AR(1) is chosen its coefficient is in range.
        let mut d0 = 0;
        for seed in 0..20 {
            let res = auto_arima(&ar1(seed, 500, 0.8), &AutoArimaOptions::default()).unwrap();
            if res.fit.order.d == 0 {
                d0 += 1;
                if res.fit.order.p == 1 && res.fit.order.q == 0 {
                    assert!((0.7..=0.9).contains(&res.fit.ar[0]));
                }
            }
        }
        assert!(d0 >= 10, "d = 0 in {d0}/20");
    }

    #[test]
    fn random_walk_differenced_once() {
        let e = noise(5, 500);
        let mut walk = vec![0.0; 500];
        for t in 1..500 {
            walk[t] = walk[t - 1] + e[t];
        }
        let res = auto_arima(&walk, &AutoArimaOptions::default()).unwrap();
        assert_eq!(res.fit.order.d, 1);
    }

    #[test]
    fn stepwise_path_aicc_non_increasing() {
        let x = ar1(9, 300, 0.5);
        let res = auto_arima(&x, &AutoArimaOptions::default()).unwrap();
        for w in res.path.windows(2) {
            assert!(w[1].aicc.unwrap() <= w[0].aicc.unwrap());
        }
    }

    #[test]
    fn zero_residuals_degenerate() {
        let res = auto_arima(&[0.0; 40], &AutoArimaOptions::default()).unwrap();
        assert_eq!(res.fit.order, ArimaOrder { p: 0, d: 0, q: 0 });
        assert_eq!(res.fit.sigma2, 0.0);
    }

    #[test]
    fn too_short_errors() {
        assert!(auto_arima(&[1.0; 29], &AutoArimaOptions::default()).is_err());
    }

    fn hand_fit(ar: Vec<f64>, ma: Vec<f64>, d: usize) -> ArimaFit {
        ArimaFit {
            order: ArimaOrder { p: ar.len(), d, q: ma.len() },
            include_mean: false,
            mean: 0.0,
            ar,
            ma,
            sigma2: 1.0,
            loglik: None,
            aicc: None,
            converged: true,
        }
    }

    #[test]
    fn ar1_one_step_by_hand() {
        let f = hand_fit(vec![0.7], vec![], 0);
        let hist = [0.3, -1.0, 2.0];
        assert_eq!(f.forecast(&hist, 2).unwrap(), vec![0.7 * 2.0, 0.7 * 0.7 * 2.0]);
    }

    #[test]
    fn ma1_memory_is_one_step() {
        let f = hand_fit(vec![], vec![0.5], 0);
        let out = f.forecast(&[1.0, -0.5, 0.8], 3).unwrap();
        assert!(out[0] != 0.0);
        assert_eq!(&out[1..], &[0.0, 0.0]);
    }

    #[test]
    fn integrated_forecast_continues_level() {
        // d = 1 white noise with drift 0: forecast stays at the last level.
        let f = hand_fit(vec![], vec![], 1);
        assert_eq!(f.forecast(&[1.0, 4.0, 2.5], 3).unwrap(), vec![2.5; 3]);
        // d = 2: linear extrapolation.
        let f = hand_fit(vec![], vec![], 2);
        assert_eq!(f.forecast(&[1.0, 3.0, 5.0], 2).unwrap(), vec![7.0, 9.0]);
    }
}
