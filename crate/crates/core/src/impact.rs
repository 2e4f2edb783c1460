//! Peak-hour feeder loading under consumption and user control.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{Day, Season};
use crate::error::{Error, Result};
use crate::features::FeatureRow;
use crate::io::fmt_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feeder {
    pub name: String,
    /// Share of the feeder's EVs in each cluster, cluster 1 first.
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub transformer_kva: f64,
    pub households_per_feeder: f64,
    pub base_load_kva_per_household: f64,
    pub power_factor: f64,
    /// Charger rating per cluster.
    pub rating_kw: Vec<f64>,
    pub peak_window_h: f64,
    /// Fraction of a cluster's daily users plugged in during the peak window.
    pub peak_user_fraction: Vec<f64>,
    pub feeders: Vec<Feeder>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let feeder = |name: &str, shares: [f64; 3]| Feeder {
            name: name.into(),
            shares: shares.to_vec(),
        };
        NetworkConfig {
            transformer_kva: 500.0,
            households_per_feeder: 96.0,
            base_load_kva_per_household: 1.0,
            power_factor: 0.98,
            rating_kw: vec![3.5, 7.0, 7.0],
            peak_window_h: 2.0,
            peak_user_fraction: vec![0.38, 0.35, 0.34],
            feeders: vec![
                feeder("f1", [1.0, 0.0, 0.0]),
                feeder("f2", [0.0, 1.0, 0.0]),
                feeder("f3", [0.7, 0.0, 0.3]),
                feeder("f4", [0.0, 0.7, 0.3]),
            ],
        }
    }
}

impl NetworkConfig {
    pub fn n_clusters(&self) -> usize {
        self.rating_kw.len()
    }

    pub fn feeder_capacity_kva(&self) -> f64 {
        self.transformer_kva / self.feeders.len() as f64
    }

    pub fn base_load_kva(&self) -> f64 {
        self.households_per_feeder * self.base_load_kva_per_household
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        let k = self.n_clusters();
        if k == 0 || self.peak_user_fraction.len() != k {
            return bad("ratings and peak fractions need one entry per cluster".into());
        }
        if self.feeders.is_empty() {
            return bad("at least one feeder is required".into());
        }
        if !(self.transformer_kva > 0.0 && self.households_per_feeder >= 0.0 && self.base_load_kva_per_household >= 0.0) {
            return bad("capacities must be positive".into());
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return bad("power factor must lie in (0, 1]".into());
        }
        if self.rating_kw.iter().any(|r| !(*r > 0.0)) {
            return bad("ratings must be positive".into());
        }
        if self.peak_user_fraction.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("peak fractions must lie in [0, 1]".into());
        }
        for f in &self.feeders {
            if f.shares.len() != k || f.shares.iter().any(|s| !(*s >= 0.0)) {
                return bad(format!("feeder {} needs one non-negative share per cluster", f.name));
            }
            if (f.shares.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("feeder {} shares must sum to 1", f.name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    ConsumptionControl,
    UserControl,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 2] = [PolicyKind::ConsumptionControl, PolicyKind::UserControl];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ConsumptionControl => "consumption_control",
            PolicyKind::UserControl => "user_control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPolicy {
    pub kind: PolicyKind,
    pub level: f64,
}

impl ControlPolicy {
    pub fn new(kind: PolicyKind, level: f64) -> Result<ControlPolicy> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::invalid(format!("control level {level} outside [0, 1]")));
        }
        Ok(ControlPolicy { kind, level })
    }
}

pub const DEFAULT_LEVELS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];
pub const DEFAULT_PENETRATIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Daily users and energy per user, per cluster.
pub trait UserForecastProvider: Sync {
    fn users_per_day(&self, cluster: usize, n_evs: f64, season: Season, day: Day) -> Result<f64>;
    fn kwh_per_user(&self, cluster: usize, season: Season, day: Day) -> Result<f64>;
}

/// Constant per-EV charge rates and per-charge energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicRateProvider {
    pub charges_per_day: Vec<f64>,
    pub kwh_per_charge: Vec<f64>,
}

impl Default for DeterministicRateProvider {
    fn default() -> Self {
        DeterministicRateProvider {
            charges_per_day: vec![0.68, 0.44, 0.36],
            kwh_per_charge: vec![5.68, 14.30, 26.80],
        }
    }
}

fn cluster_entry(v: &[f64], cluster: usize) -> Result<f64> {
    cluster
        .checked_sub(1)
        .and_then(|i| v.get(i))
        .copied()
        .ok_or_else(|| Error::invalid(format!("no provider entry for cluster {cluster}")))
}

impl UserForecastProvider for DeterministicRateProvider {
    fn users_per_day(&self, cluster: usize, n_evs: f64, _: Season, _: Day) -> Result<f64> {
        Ok(n_evs * cluster_entry(&self.charges_per_day, cluster)?)
    }

    fn kwh_per_user(&self, cluster: usize, _: Season, _: Day) -> Result<f64> {
        cluster_entry(&self.kwh_per_charge, cluster)
    }
}

/// Rates read off scenario forecasts: users per owner and consumption per
/// user, averaged over forecast days with the requested season and weekday.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ForecastTableProvider {
    /// Per cluster: (season, day, users per owner, kWh per user).
    pub cells: Vec<Vec<(Season, Day, f64, f64)>>,
}

impl ForecastTableProvider {
    /// Adds one cluster's forecasts; clusters must be added in order.
    pub fn push_cluster(&mut self, frame: &[FeatureRow], users: &[f64], consumed: &[f64]) -> Result<()> {
        if frame.len() != users.len() || frame.len() != consumed.len() {
            return Err(Error::invalid("forecast columns differ in length"));
        }
        let cells = frame
            .iter()
            .zip(users.iter().zip(consumed))
            .filter(|(r, (u, c))| r.owners > 0.0 && **u > 0.0 && c.is_finite())
            .map(|(r, (u, c))| (r.season, r.day, u / r.owners, c.max(0.0) / u))
            .collect::<Vec<_>>();
        if cells.is_empty() {
            return Err(Error::invalid("forecast has no day with positive users"));
        }
        self.cells.push(cells);
        Ok(())
    }

    fn lookup(&self, cluster: usize, season: Season, day: Day, pick: fn(&(Season, Day, f64, f64)) -> f64) -> Result<f64> {
        let cells = cluster
            .checked_sub(1)
            .and_then(|i| self.cells.get(i))
            .ok_or_else(|| Error::invalid(format!("no forecast for cluster {cluster}")))?;
        let mean = |f: &dyn Fn(&&(Season, Day, f64, f64)) -> bool| {
            let v: Vec<f64> = cells.iter().filter(f).map(pick).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        // Fall back to the season, then to all days, when a cell is not covered.
        mean(&|c| c.0 == season && c.1 == day)
            .or_else(|| mean(&|c| c.0 == season))
            .or_else(|| mean(&|_| true))
            .ok_or_else(|| Error::invalid("empty forecast table"))
    }
}

impl UserForecastProvider for ForecastTableProvider {
    fn users_per_day(&self, cluster: usize, n_evs: f64, season: Season, day: Day) -> Result<f64> {
        Ok(n_evs * self.lookup(cluster, season, day, |c| c.2)?)
    }

    fn kwh_per_user(&self, cluster: usize, season: Season, day: Day) -> Result<f64> {
        self.lookup(cluster, season, day, |c| c.3)
    }
}

/// Expected users plugged in during the peak window.
pub fn peak_users(
    cluster: usize,
    n_evs: f64,
    provider: &dyn UserForecastProvider,
    season: Season,
    day: Day,
    config: &NetworkConfig,
) -> Result<f64> {
    if !(n_evs >= 0.0) {
        return Err(Error::invalid("EV count must be non-negative"));
    }
    if n_evs == 0.0 {
        return Ok(0.0);
    }
    let users = provider.users_per_day(cluster, n_evs, season, day)?;
    Ok(users * cluster_entry(&config.peak_user_fraction, cluster)?)
}

/// Peak-window EV load for peak users listed by cluster, cluster 1 first.
pub fn ev_load_kva(peak_users: &[f64], policy: ControlPolicy, config: &NetworkConfig) -> f64 {
    let allowed = match policy.kind {
        PolicyKind::UserControl => 1.0 - policy.level,
        PolicyKind::ConsumptionControl => 1.0,
    };
    peak_users
        .iter()
        .zip(&config.rating_kw)
        .map(|(u, r)| u * allowed * r / config.power_factor)
        .sum()
}

pub fn charging_duration_h(rating_kw: f64, kwh_per_user: f64, policy: ControlPolicy) -> f64 {
    match policy.kind {
        PolicyKind::ConsumptionControl => kwh_per_user * (1.0 - policy.level) / rating_kw,
        PolicyKind::UserControl => kwh_per_user / rating_kw,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactResult {
    pub feeder: String,
    pub season: Season,
    pub penetration: f64,
    pub policy: ControlPolicy,
    pub peak_users: Vec<f64>,
    pub ev_load_kva: f64,
    pub base_load_kva: f64,
    pub agg_load_kva: f64,
    pub margin_kva: f64,
    pub duration_h: Vec<f64>,
}

fn day_mean(f: impl Fn(Day) -> Result<f64>) -> Result<f64> {
    let mut total = 0.0;
    for d in Day::ALL {
        total += f(d)?;
    }
    Ok(total / Day::ALL.len() as f64)
}

/// Daily-mean peak loading of one feeder in one season.
pub fn aggregate_load(
    feeder: &Feeder,
    season: Season,
    penetration: f64,
    policy: ControlPolicy,
    provider: &dyn UserForecastProvider,
    config: &NetworkConfig,
) -> Result<ImpactResult> {
    if !(0.0..=1.0).contains(&penetration) {
        return Err(Error::invalid(format!("penetration {penetration} outside [0, 1]")));
    }
    let mut users = Vec::with_capacity(config.n_clusters());
    let mut duration = Vec::with_capacity(config.n_clusters());
    for (i, share) in feeder.shares.iter().enumerate() {
        let cluster = i + 1;
        let n_evs = config.households_per_feeder * penetration * share;
        users.push(day_mean(|d| peak_users(cluster, n_evs, provider, season, d, config))?);
        let kwh = day_mean(|d| provider.kwh_per_user(cluster, season, d))?;
        duration.push(charging_duration_h(config.rating_kw[i], kwh, policy));
    }
    let ev = ev_load_kva(&users, policy, config);
    let base = config.base_load_kva();
    let agg = base + ev;
    Ok(ImpactResult {
        feeder: feeder.name.clone(),
        season,
        penetration,
        policy,
        peak_users: users,
        ev_load_kva: ev,
        base_load_kva: base,
        agg_load_kva: agg,
        margin_kva: config.feeder_capacity_kva() - agg,
        duration_h: duration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub penetrations: Vec<f64>,
    pub levels: Vec<f64>,
    pub seasons: Vec<Season>,
    pub policies: Vec<PolicyKind>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            penetrations: DEFAULT_PENETRATIONS.to_vec(),
            levels: DEFAULT_LEVELS.to_vec(),
            seasons: Season::ALL.to_vec(),
            policies: PolicyKind::ALL.to_vec(),
        }
    }
}

/// Every (feeder, season, penetration, policy, level) cell in that order.
pub fn sweep(config: &NetworkConfig, grid: &SweepGrid, provider: &dyn UserForecastProvider) -> Result<Vec<ImpactResult>> {
    config.validate()?;
    let mut cells = Vec::new();
    for (fi, _) in config.feeders.iter().enumerate() {
        for &s in &grid.seasons {
            for &p in &grid.penetrations {
                for &k in &grid.policies {
                    for &c in &grid.levels {
                        cells.push((fi, s, p, ControlPolicy::new(k, c)?));
                    }
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(fi, s, p, pol)| aggregate_load(&config.feeders[fi], s, p, pol, provider, config))
        .collect()
}

/// Smallest level in `levels` whose user-control load fits the feeder.
pub fn min_control_for_capacity(
    feeder: &Feeder,
    season: Season,
    penetration: f64,
    levels: &[f64],
    provider: &dyn UserForecastProvider,
    config: &NetworkConfig,
) -> Result<Option<f64>> {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    for c in sorted {
        let r = aggregate_load(feeder, season, penetration, ControlPolicy::new(PolicyKind::UserControl, c)?, provider, config)?;
        if r.agg_load_kva <= config.feeder_capacity_kva() {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

fn cluster_cols(prefix: &str, k: usize) -> String {
    (1..=k).map(|c| format!(",{prefix}_c{c}")).collect()
}

pub fn results_csv(rows: &[ImpactResult], k: usize) -> String {
    let mut out = format!(
        "feeder,season,penetration,policy,level{},ev_load_kva,base_load_kva,agg_load_kva,margin_kva{}\n",
        cluster_cols("peak_users", k),
        cluster_cols("duration_h", k)
    );
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.feeder,
            r.season.as_str(),
            fmt_f64(r.penetration),
            r.policy.kind.name(),
            fmt_f64(r.policy.level)
        );
        for u in &r.peak_users {
            let _ = write!(out, ",{}", fmt_f64(*u));
        }
        let _ = write!(
            out,
            ",{},{},{},{}",
            fmt_f64(r.ev_load_kva),
            fmt_f64(r.base_load_kva),
            fmt_f64(r.agg_load_kva),
            fmt_f64(r.margin_kva)
        );
        for d in &r.duration_h {
            let _ = write!(out, ",{}", fmt_f64(*d));
        }
        out.push('\n');
    }
    out
}

/// Load against penetration for one policy, one line per feeder, season and level.
pub fn load_plot_csv(rows: &[ImpactResult], kind: PolicyKind, capacity_kva: f64) -> String {
    let mut out = String::from("feeder,season,level,penetration,ev_load_kva,agg_load_kva,capacity_kva\n");
    for r in rows.iter().filter(|r| r.policy.kind == kind) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.feeder,
            r.season.as_str(),
            fmt_f64(r.policy.level),
            fmt_f64(r.penetration),
            fmt_f64(r.ev_load_kva),
            fmt_f64(r.agg_load_kva),
            fmt_f64(capacity_kva)
        );
    }
    out
}

/// Charging duration against penetration per cluster, taken from the pure feeder
/// of each cluster where one exists and from the first feeder containing it otherwise.
pub fn duration_plot_csv(rows: &[ImpactResult], config: &NetworkConfig, window_h: f64) -> String {
    let mut out = String::from("cluster,season,policy,level,penetration,duration_h,window_h\n");
    for i in 0..config.n_clusters() {
        let source = config
            .feeders
            .iter()
            .find(|f| f.shares[i] == 1.0)
            .or_else(|| config.feeders.iter().find(|f| f.shares[i] > 0.0));
        let Some(feeder) = source else { continue };
        for r in rows.iter().filter(|r| r.feeder == feeder.name) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i + 1,
                r.season.as_str(),
                r.policy.kind.name(),
                fmt_f64(r.policy.level),
                fmt_f64(r.penetration),
                fmt_f64(r.duration_h[i]),
                fmt_f64(window_h)
            );
        }
    }
    out
}

/// Minimum user-control level per feeder, season and penetration.
pub fn min_control_csv(
    config: &NetworkConfig,
    grid: &SweepGrid,
    provider: &dyn UserForecastProvider,
) -> Result<String> {
    let mut out = String::from("feeder,season,penetration,min_control\n");
    for f in &config.feeders {
        for &s in &grid.seasons {
            for &p in &grid.penetrations {
                let c = min_control_for_capacity(f, s, p, &grid.levels, provider, config)?;
                let cell = c.map_or_else(|| "none".to_string(), fmt_f64);
                let _ = writeln!(out, "{},{},{},{}", f.name, s.as_str(), fmt_f64(p), cell);
            }
        }
    }
    Ok(out)
}
