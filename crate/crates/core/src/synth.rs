//! Synthetic charging trials calibrated to published per-cluster means.

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ingest::{ChargingTransaction, EvType, TrialStage};
use crate::seed;

/// 17:00 to 19:00.
pub const PEAK_START_H: u32 = 17;
pub const PEAK_END_H: u32 = 19;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Discrete battery capacities (kWh) an owner may have.
    pub capacities: Vec<f64>,
    pub mean_kwh_per_charge: f64,
    pub charges_per_day: f64,
    pub rating_kw: f64,
}

impl ClusterStats {
    pub fn defaults() -> Vec<ClusterStats> {
        vec![
            ClusterStats {
                capacities: vec![4.4, 6.0, 7.6, 8.8, 9.0, 10.5, 12.0, 13.8, 16.0, 18.7],
                mean_kwh_per_charge: 5.68,
                charges_per_day: 0.68,
                rating_kw: 3.5,
            },
            ClusterStats {
                capacities: vec![22.0, 24.0, 27.2, 28.0, 30.0, 33.2, 35.8, 38.0, 40.0, 41.0],
                mean_kwh_per_charge: 14.30,
                charges_per_day: 0.44,
                rating_kw: 7.0,
            },
            ClusterStats {
                capacities: vec![60.0, 64.0, 75.0, 85.0, 90.0, 100.0],
                mean_kwh_per_charge: 26.80,
                charges_per_day: 0.36,
                rating_kw: 7.0,
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arrival {
    /// Owners join at evenly spaced days over the first `arrival_span` of the horizon.
    Linear,
    /// Half the owners join on day 0, the rest at mid-horizon.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub start: NaiveDate,
    pub horizon_days: usize,
    /// Final owner count per cluster, aligned with `clusters`.
    pub owners_final: Vec<usize>,
    pub arrival: Arrival,
    /// Fraction of the horizon over which linear arrival is spread.
    pub arrival_span: f64,
    pub clusters: Vec<ClusterStats>,
    /// Monday first; must average to 1.
    pub weekday: [f64; 7],
    /// Winter, spring, summer, autumn; must average to 1.
    pub season: [f64; 4],
    pub peak_plug_share: f64,
    pub noise_cv: f64,
    /// Per-owner charge rates are the cluster rate times U(1 - spread, 1 + spread).
    pub rate_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: NaiveDate::from_ymd_opt(2017, 2, 1).expect("valid date"),
            horizon_days: 540,
            owners_final: vec![144, 156, 60],
            arrival: Arrival::Linear,
            arrival_span: 0.6,
            clusters: ClusterStats::defaults(),
            weekday: [1.05, 1.05, 1.05, 1.05, 1.0, 0.9, 0.9],
            season: [1.1, 1.0, 0.9, 1.0],
            peak_plug_share: 0.28,
            noise_cv: 0.3,
            rate_spread: 0.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if self.owners_final.len() != self.clusters.len() {
            return bad("owners_final needs one count per cluster");
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        if (mean(&self.weekday) - 1.0).abs() > 1e-9 || (mean(&self.season) - 1.0).abs() > 1e-9 {
            return bad("weekday and season multipliers must average to 1");
        }
        if self.weekday.iter().chain(&self.season).any(|m| !(*m >= 0.0)) {
            return bad("multipliers must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.peak_plug_share) {
            return bad("peak_plug_share must lie in [0, 1]");
        }
        if !(self.noise_cv > 0.0) {
            return bad("noise_cv must be positive");
        }
        if !(0.0..1.0).contains(&self.rate_spread) {
            return bad("rate_spread must lie in [0, 1)");
        }
        if !(self.arrival_span > 0.0 && self.arrival_span <= 1.0) {
            return bad("arrival_span must lie in (0, 1]");
        }
        for c in &self.clusters {
            if c.capacities.is_empty() || c.capacities.iter().any(|k| !(*k > 0.0)) {
                return bad("every cluster needs positive capacities");
            }
            if !(c.mean_kwh_per_charge > 0.0 && c.charges_per_day >= 0.0 && c.rating_kw > 0.0) {
                return bad("cluster means and ratings must be positive");
            }
        }
        Ok(())
    }

    fn join_day(&self, j: usize, n: usize) -> usize {
        match self.arrival {
            Arrival::Linear => {
                let span = (self.arrival_span * self.horizon_days as f64).floor() as usize;
                j * span.max(1) / n.max(1)
            }
            Arrival::Step => {
                if j < n.div_ceil(2) {
                    0
                } else {
                    self.horizon_days / 2
                }
            }
        }
    }

    fn stage(&self, day: usize) -> TrialStage {
        match 3 * day / self.horizon_days.max(1) {
            0 => TrialStage::Uncontrolled,
            1 => TrialStage::T1,
            _ => TrialStage::T2,
        }
    }
}

/// Mean of a normal(loc, sd) truncated to (0, cap].
pub fn truncated_mean(loc: f64, sd: f64, cap: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    let a = (0.0 - loc) / sd;
    let b = (cap - loc) / sd;
    let z = n.cdf(b) - n.cdf(a);
    if z <= 1e-300 {
        return if loc > cap { cap } else { 0.0 };
    }
    loc + sd * (n.pdf(a) - n.pdf(b)) / z
}

/// Location of the untruncated normal (sd = cv * target) whose truncated mean,
/// averaged over the capacity list, equals `target`.
pub fn calibrate_location(target: f64, cv: f64, capacities: &[f64]) -> Result<f64> {
    let sd = cv * target;
    let avg = |loc: f64| capacities.iter().map(|c| truncated_mean(loc, sd, *c)).sum::<f64>() / capacities.len() as f64;
    let (mut lo, mut hi) = (-10.0 * target, 10.0 * target);
    if avg(hi) < target || avg(lo) > target {
        return Err(Error::invalid(format!(
            "mean {target} kWh is not reachable with capacities {capacities:?}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if avg(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn draw_energy(rng: &mut impl Rng, loc: f64, sd: f64, cap: f64) -> f64 {
    let n = Normal::new(loc, sd).expect("positive sd");
    let (lo, hi) = (n.cdf(0.0), n.cdf(cap));
    let u = lo + (hi - lo) * rng.random::<f64>();
    let x = n.inverse_cdf(u);
    // Keep two decimals like metered data, inside (0, cap].
    ((x * 100.0).round() / 100.0).clamp(0.01, cap)
}

fn draw_plug_in_seconds(rng: &mut impl Rng, peak_share: f64) -> u32 {
    let (ps, pe) = (PEAK_START_H * 3600, PEAK_END_H * 3600);
    if rng.random::<f64>() < peak_share {
        rng.random_range(ps..pe)
    } else {
        let s = rng.random_range(0..(86_400 - (pe - ps)));
        if s < ps {
            s
        } else {
            s + (pe - ps)
        }
    }
}

fn at(date: NaiveDate, secs: u32) -> NaiveDateTime {
    date.and_time(NaiveTime::MIN) + Duration::seconds(i64::from(secs))
}

struct Owner {
    cluster: usize,
    index: usize,
    join: usize,
}

fn owner_sessions(cfg: &SynthConfig, o: &Owner, loc: f64) -> Vec<ChargingTransaction> {
    let stats = &cfg.clusters[o.cluster];
    let cid = o.cluster + 1;
    let mut rng = seed::rng(seed::derive_index(
        seed::derive(cfg.seed, &format!("cluster{cid}")),
        o.index as u64,
    ));
    let capacity = stats.capacities[rng.random_range(0..stats.capacities.len())];
    let rate = stats.charges_per_day * rng.random_range(1.0 - cfg.rate_spread..=1.0 + cfg.rate_spread);
    let sd = cfg.noise_cv * stats.mean_kwh_per_charge;
    let pid = format!("c{cid}-p{:04}", o.index + 1);
    let mut out = Vec::new();
    for day in o.join..cfg.horizon_days {
        let date = cfg.start + Duration::days(day as i64);
        let p = (rate
            * cfg.weekday[crate::calendar::Day::of(date).index()]
            * cfg.season[crate::calendar::season_of(date).index()])
        .min(1.0);
        // The joining day always carries a session so the owner is observed.
        let charges = day == o.join || rng.random::<f64>() < p;
        if !charges {
            continue;
        }
        let energy = draw_energy(&mut rng, loc, sd, capacity);
        let plug_in = at(date, draw_plug_in_seconds(&mut rng, cfg.peak_plug_share));
        let delay = Duration::seconds(rng.random_range(0..600));
        let charge = Duration::seconds((energy / stats.rating_kw * 3600.0).ceil() as i64);
        let idle = Duration::seconds(rng.random_range(0..4 * 3600));
        out.push(ChargingTransaction {
            charger_id: format!("ch-{pid}"),
            participant_id: pid.clone(),
            car_kw: stats.rating_kw,
            car_kwh: capacity,
            group_id: format!("g{cid}"),
            trial_stage: cfg.stage(day),
            plug_in,
            plug_out: plug_in + delay + charge + idle,
            consumed_kwh: energy,
            active_start: plug_in + delay,
            car_make: "Synthetic".into(),
            car_model: format!("C{cid}-{capacity}kWh"),
            ev_type: if cid == 1 { EvType::Phev } else { EvType::Bev },
        });
    }
    out
}

/// Generates a trial, sorted by (plug-in date, participant, plug-in time).
pub fn generate_trial(cfg: &SynthConfig) -> Result<Vec<ChargingTransaction>> {
    cfg.validate()?;
    let locs: Vec<f64> = cfg
        .clusters
        .iter()
        .map(|c| calibrate_location(c.mean_kwh_per_charge, cfg.noise_cv, &c.capacities))
        .collect::<Result<_>>()?;
    let owners: Vec<Owner> = cfg
        .owners_final
        .iter()
        .enumerate()
        .flat_map(|(cluster, &n)| {
            (0..n).map(move |index| Owner {
                cluster,
                index,
                join: cfg.join_day(index, n),
            })
        })
        .filter(|o| o.join < cfg.horizon_days)
        .collect();
    let mut txns: Vec<ChargingTransaction> = owners
        .par_iter()
        .map(|o| owner_sessions(cfg, o, locs[o.cluster]))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    txns.sort_by(|a, b| {
        a.plug_in
            .date()
            .cmp(&b.plug_in.date())
            .then_with(|| a.participant_id.cmp(&b.participant_id))
            .then_with(|| a.plug_in.cmp(&b.plug_in))
    });
    Ok(txns)
}

/// Share of sessions whose plug-in falls in the peak window.
pub fn peak_plug_share(txns: &[ChargingTransaction]) -> f64 {
    use chrono::Timelike;
    let peak = txns
        .iter()
        .filter(|t| (PEAK_START_H..PEAK_END_H).contains(&t.plug_in.hour()))
        .count();
    peak as f64 / txns.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::summarize_owners;
    use crate::series::build_daily_series;
    use std::collections::BTreeMap;

    fn one_cluster(n: usize, days: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            horizon_days: days,
            owners_final: vec![n, 0, 0],
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn no_owners_no_sessions() {
        let cfg = SynthConfig {
            owners_final: vec![0, 0, 0],
            ..SynthConfig::default()
        };
        assert!(generate_trial(&cfg).unwrap().is_empty());
    }

    #[test]
    fn cluster_one_matches_calibration_targets() {
        let cfg = SynthConfig {
            arrival: Arrival::Step,
            ..one_cluster(200, 365, 1)
        };
        let txns = generate_trial(&cfg).unwrap();
        let owners = summarize_owners(&txns);
        assert_eq!(owners.len(), 200);
        let n = owners.len() as f64;
        let kwh = owners.iter().map(|o| o.mean_kwh_per_charge).sum::<f64>() / n;
        let freq = owners.iter().map(|o| o.charges_per_day).sum::<f64>() / n;
        assert!((kwh - 5.68).abs() <= 0.5, "mean kWh {kwh}");
        assert!((freq - 0.68).abs() <= 0.05, "charges/day {freq}");
        let share = peak_plug_share(&txns);
        assert!((share - 0.28).abs() <= 0.03, "peak share {share}");
    }

    #[test]
    fn sessions_satisfy_record_invariants() {
        let txns = generate_trial(&SynthConfig {
            horizon_days: 120,
            owners_final: vec![20, 20, 10],
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(!txns.is_empty());
        assert!(txns.iter().all(|t| t.violation().is_none()));
        assert!(txns.iter().all(|t| t.trial_stage != TrialStage::T3));
    }

    #[test]
    fn owners_series_rises_to_final_count() {
        let cfg = SynthConfig {
            horizon_days: 200,
            owners_final: vec![30, 25, 12],
            seed: 4,
            ..SynthConfig::default()
        };
        let txns = generate_trial(&cfg).unwrap();
        let map: BTreeMap<String, u32> = txns
            .iter()
            .map(|t| (t.participant_id.clone(), t.participant_id[1..2].parse().unwrap()))
            .collect();
        let series = build_daily_series(&txns, &map).unwrap();
        for (s, n) in series.iter().zip(&cfg.owners_final) {
            assert!(s.rows.windows(2).all(|w| w[1].owners >= w[0].owners));
            assert_eq!(s.rows.last().unwrap().owners, *n as f64);
        }
    }

    #[test]
    fn seeded_and_seed_sensitive() {
        let a = generate_trial(&one_cluster(10, 60, 3)).unwrap();
        let b = generate_trial(&one_cluster(10, 60, 3)).unwrap();
        let c = generate_trial(&one_cluster(10, 60, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn calibration_hits_target_mean() {
        for c in ClusterStats::defaults() {
            let loc = calibrate_location(c.mean_kwh_per_charge, 0.3, &c.capacities).unwrap();
            let sd = 0.3 * c.mean_kwh_per_charge;
            let avg =
                c.capacities.iter().map(|k| truncated_mean(loc, sd, *k)).sum::<f64>() / c.capacities.len() as f64;
            assert!((avg - c.mean_kwh_per_charge).abs() < 1e-9);
        }
        // Far above the cap the truncated mean approaches the cap.
        assert!((truncated_mean(0.0, 1.0, 1e6) - (2.0f64 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = SynthConfig::default();
        cfg.weekday[0] = 2.0;
        assert!(generate_trial(&cfg).is_err());
        let cfg = SynthConfig {
            peak_plug_share: 1.5,
            ..SynthConfig::default()
        };
        assert!(generate_trial(&cfg).is_err());
        let cfg = SynthConfig {
            owners_final: vec![1],
            ..SynthConfig::default()
        };
        assert!(generate_trial(&cfg).is_err());
    }

    #[test]
    fn csv_roundtrip_has_no_rejects() {
        let txns = generate_trial(&SynthConfig {
            horizon_days: 30,
            owners_final: vec![5, 5, 5],
            ..SynthConfig::default()
        })
        .unwrap();
        let mut buf = Vec::new();
        crate::ingest::write_transactions(&mut buf, &txns).unwrap();
        let (back, rejects) =
            crate::ingest::parse_transactions(buf.as_slice(), &crate::ingest::ColumnMap::default()).unwrap();
        assert!(rejects.is_empty());
        assert_eq!(back, txns);
    }
}
