//! Nested p-feature modelling, variable-origin evaluation and deployment
//! forecasting.
//!
//! A scenario frame carries owners, day and season only. Step one appends a
//! p-feature for each of users, trans and demand, forecast from the scenario
//! columns. Step two re-forecasts trans and demand from p_users and keeps a
//! candidate only when its MAPE is strictly lower. Step three fits the
//! consumption model on the true feature and forecasts from its p-feature.

pub mod forecaster;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::metrics::mape;
pub use forecaster::{fit_forecaster, Ctx, Family, FitEvent, FitHook, Payload, TrainedForecaster, TuningBudget};

use crate::error::{Error, Result};
use crate::features::{FeatureRow, PFeature, PValues};
use crate::series::{DailyClusterSeries, DailyRow, Variable};
use crate::seed;

/// Consumption feature sets: the scenario columns alone or plus one p-feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    Base,
    Users,
    Trans,
    Demand,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [FeatureSet::Base, FeatureSet::Users, FeatureSet::Trans, FeatureSet::Demand];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Base => "base",
            FeatureSet::Users => "+p_users",
            FeatureSet::Trans => "+p_trans",
            FeatureSet::Demand => "+p_demand",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureSet> {
        let s = s.trim_start_matches('+');
        FeatureSet::ALL.into_iter().find(|f| f.name().trim_start_matches('+') == s)
    }

    pub fn p_features(self) -> Vec<PFeature> {
        match self {
            FeatureSet::Base => vec![],
            FeatureSet::Users => vec![PFeature::Users],
            FeatureSet::Trans => vec![PFeature::Trans],
            FeatureSet::Demand => vec![PFeature::Demand],
        }
    }
}

/// Training rows with their true o-features in the p slots.
pub fn train_rows(train: &DailyClusterSeries) -> Vec<FeatureRow> {
    train.rows.iter().map(FeatureRow::from_daily).collect()
}

fn check_after(train: &DailyClusterSeries, frame: &[FeatureRow]) -> Result<()> {
    if let (Some(last), Some(first)) = (train.rows.last(), frame.first()) {
        if first.date <= last.date {
            return Err(Error::invalid(format!(
                "forecast rows start {} but training ends {}",
                first.date, last.date
            )));
        }
    }
    Ok(())
}

/// Step one: forecast each o-feature from the scenario columns.
pub fn build_p_features(
    ctx: &Ctx,
    train: &DailyClusterSeries,
    test_base: &[FeatureRow],
    seed: u64,
) -> Result<Vec<FeatureRow>> {
    check_after(train, test_base)?;
    let rows = train_rows(train);
    let mut out: Vec<FeatureRow> = test_base
        .iter()
        .map(|r| FeatureRow {
            p: PValues::default(),
            ..r.clone()
        })
        .collect();
    for f in PFeature::ALL {
        let y = train.column(f.source());
        let m = fit_forecaster(ctx, f.name(), &rows, &y, &[], seed::derive(seed, f.name()))?;
        for (r, v) in out.iter_mut().zip(m.forecast(test_base)?) {
            r.p.set(f, Some(v));
        }
    }
    Ok(out)
}

/// Candidate re-forecasts allowed by causality, as (target, source).
pub const REFINEMENTS: [(PFeature, PFeature); 2] = [(PFeature::Trans, PFeature::Users), (PFeature::Demand, PFeature::Users)];

/// Demand is a linear transform of trans, so trans may never feed demand;
/// users is the root and is never re-forecast.
pub fn check_causal(target: PFeature, source: PFeature) -> Result<()> {
    if REFINEMENTS.contains(&(target, source)) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "causality guard: {} may not be forecast from {}",
            target.name(),
            source.name()
        )))
    }
}

/// Forecast of `target` from the scenario columns plus the `source` p-feature.
pub fn reforecast(
    ctx: &Ctx,
    train: &DailyClusterSeries,
    frame: &[FeatureRow],
    target: PFeature,
    source: PFeature,
    seed: u64,
) -> Result<Vec<f64>> {
    check_causal(target, source)?;
    let label = format!("{}_from_{}", target.name(), source.name());
    let y = train.column(target.source());
    let m = fit_forecaster(ctx, &label, &train_rows(train), &y, &[source], seed::derive(seed, &label))?;
    m.forecast(frame)
}

/// Which candidate re-forecasts replaced their incumbents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decisions {
    pub trans_from_users: bool,
    pub demand_from_users: bool,
}

impl Decisions {
    pub fn get(&self, target: PFeature) -> bool {
        match target {
            PFeature::Trans => self.trans_from_users,
            PFeature::Demand => self.demand_from_users,
            PFeature::Users => false,
        }
    }

    pub fn set(&mut self, target: PFeature, v: bool) {
        match target {
            PFeature::Trans => self.trans_from_users = v,
            PFeature::Demand => self.demand_from_users = v,
            PFeature::Users => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRecord {
    pub target: PFeature,
    pub source: PFeature,
    pub incumbent_mape: f64,
    pub candidate_mape: f64,
    pub replaced: bool,
}

pub enum RefineMode<'a> {
    /// Compare against held-out actuals and record the decisions.
    Evaluate(&'a [DailyRow]),
    /// Apply previously recorded decisions.
    Replay(Decisions),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub frame: Vec<FeatureRow>,
    pub decisions: Decisions,
    pub records: Vec<RefineRecord>,
}

/// Replaces `incumbent` by `candidate` iff the candidate MAPE is strictly lower.
pub fn strictly_better(actual: &[f64], incumbent: &[f64], candidate: &[f64]) -> Result<(f64, f64, bool)> {
    let mi = mape(actual, incumbent)?;
    let mc = mape(actual, candidate)?;
    Ok((mi, mc, mc < mi))
}

/// Step two: one pass over the allowed re-forecasts in causal order.
pub fn refine_p_features(
    ctx: &Ctx,
    train: &DailyClusterSeries,
    frame: &[FeatureRow],
    mode: RefineMode<'_>,
    seed: u64,
) -> Result<Refined> {
    let mut out = frame.to_vec();
    let mut decisions = Decisions::default();
    let mut records = Vec::new();
    for (target, source) in REFINEMENTS {
        let incumbent: Vec<f64> = frame
            .iter()
            .map(|r| r.p.get(target).ok_or_else(|| Error::Schema(format!("missing {}", target.name()))))
            .collect::<Result<_>>()?;
        let replace = match &mode {
            RefineMode::Evaluate(actual) => {
                if actual.len() != frame.len() {
                    return Err(Error::invalid("held-out actuals and frame differ in length"));
                }
                let candidate = reforecast(ctx, train, frame, target, source, seed)?;
                let truth: Vec<f64> = actual.iter().map(|r| r.get(target.source())).collect();
                let (mi, mc, better) = strictly_better(&truth, &incumbent, &candidate)?;
                records.push(RefineRecord {
                    target,
                    source,
                    incumbent_mape: mi,
                    candidate_mape: mc,
                    replaced: better,
                });
                better.then_some(candidate)
            }
            RefineMode::Replay(d) => {
                if d.get(target) {
                    Some(reforecast(ctx, train, frame, target, source, seed)?)
                } else {
                    None
                }
            }
        };
        if let Some(values) = replace {
            decisions.set(target, true);
            for (r, v) in out.iter_mut().zip(values) {
                r.p.set(target, Some(v));
            }
        }
    }
    Ok(Refined {
        frame: out,
        decisions,
        records,
    })
}

/// Step three: consumption model on the true features of `set`, forecast
/// from the frame's p-features.
pub fn forecast_consumption(
    ctx: &Ctx,
    train: &DailyClusterSeries,
    frame: &[FeatureRow],
    set: FeatureSet,
    seed: u64,
) -> Result<Vec<f64>> {
    check_after(train, frame)?;
    let y = train.column(Variable::Consumed);
    let m = fit_forecaster(ctx, "consumed", &train_rows(train), &y, &set.p_features(), seed::derive(seed, set.name()))?;
    m.forecast(frame)
}

/// Users from the scenario columns only.
pub fn forecast_users(
    ctx: &Ctx,
    train: &DailyClusterSeries,
    frame: &[FeatureRow],
    p_features: &[PFeature],
    seed: u64,
) -> Result<Vec<f64>> {
    if !p_features.is_empty() {
        return Err(Error::invalid("users are forecast from owners, day and season only"));
    }
    check_after(train, frame)?;
    let y = train.column(Variable::Users);
    let m = fit_forecaster(ctx, "p_users", &train_rows(train), &y, &[], seed::derive(seed, PFeature::Users.name()))?;
    m.forecast(frame)
}

pub const ORIGIN_FRACTIONS: [f64; 3] = [0.7, 0.8, 0.9];

/// Training lengths floor(n f) for each origin fraction.
pub fn origin_splits(n: usize) -> Result<Vec<usize>> {
    let splits: Vec<usize> = ORIGIN_FRACTIONS.iter().map(|f| (n as f64 * f).floor() as usize).collect();
    if splits.iter().any(|&s| s == 0 || s >= n) {
        return Err(Error::invalid(format!("series of length {n} cannot hold 70/80/90% splits")));
    }
    Ok(splits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginScores {
    pub mapes: Vec<f64>,
    pub mean: f64,
}

impl OriginScores {
    pub fn new(mapes: Vec<f64>) -> OriginScores {
        let mean = mapes.iter().sum::<f64>() / mapes.len() as f64;
        OriginScores { mapes, mean }
    }
}

/// Fits on each chronological prefix and scores `target` on the suffix.
/// `forecast` sees the training prefix and the suffix's scenario rows only.
pub fn variable_origin_eval<F>(series: &DailyClusterSeries, target: Variable, mut forecast: F) -> Result<OriginScores>
where
    F: FnMut(usize, &DailyClusterSeries, &[FeatureRow]) -> Result<Vec<f64>>,
{
    let n = series.len();
    let mut mapes = Vec::new();
    for (k, split) in origin_splits(n)?.into_iter().enumerate() {
        let train = series.slice(0..split);
        let test = series.slice(split..n);
        let scenario = FeatureRow::scenario_of(&test);
        let f = forecast(k, &train, &scenario)?;
        mapes.push(mape(&test.column(target), &f)?);
    }
    Ok(OriginScores::new(mapes))
}

/// Where the consumption models take their p-features from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PMode {
    /// Steps one and two.
    Nested,
    /// True test values stand in for the p-features.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionCell {
    pub cluster: u32,
    pub family: Family,
    pub feature_set: FeatureSet,
    pub scores: OriginScores,
}

/// Accuracy of a p-feature forecast of `target` from the scenario columns
/// (`source` empty) or from the scenario columns plus `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFeatureCell {
    pub cluster: u32,
    pub family: Family,
    pub target: PFeature,
    pub source: Option<PFeature>,
    pub scores: OriginScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionCell {
    pub cluster: u32,
    pub family: Family,
    pub origin: f64,
    pub decisions: Decisions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub consumption: Vec<ConsumptionCell>,
    pub p_features: Vec<PFeatureCell>,
    pub decisions: Vec<DecisionCell>,
}

fn cell_seed(root: u64, cluster: u32, family: Family) -> u64 {
    seed::derive(seed::derive(root, &format!("cluster{cluster}")), family.name())
}

/// All consumption feature sets and p-feature accuracies for one cluster and family.
pub fn evaluate_cluster(
    ctx: &Ctx,
    series: &DailyClusterSeries,
    mode: PMode,
    root_seed: u64,
) -> Result<EvaluationReport> {
    let n = series.len();
    let base_seed = cell_seed(root_seed, series.cluster, ctx.family);
    let mut cons: Vec<Vec<f64>> = vec![Vec::new(); FeatureSet::ALL.len()];
    let mut pf: Vec<((PFeature, Option<PFeature>), Vec<f64>)> = Vec::new();
    let mut push_pf = |key: (PFeature, Option<PFeature>), v: f64| match pf.iter_mut().find(|e| e.0 == key) {
        Some(e) => e.1.push(v),
        None => pf.push((key, vec![v])),
    };
    let mut decisions = Vec::new();
    for (k, split) in origin_splits(n)?.into_iter().enumerate() {
        let seed = seed::derive_index(base_seed, k as u64);
        let train = series.slice(0..split);
        let test = series.slice(split..n);
        let scenario = FeatureRow::scenario_of(&test);
        let frame = match mode {
            PMode::Oracle => test.rows.iter().map(FeatureRow::from_daily).collect(),
            PMode::Nested => {
                let built = build_p_features(ctx, &train, &scenario, seed)?;
                for f in PFeature::ALL {
                    let p: Vec<f64> = built.iter().map(|r| r.p.get(f).unwrap_or(f64::NAN)).collect();
                    push_pf((f, None), mape(&test.column(f.source()), &p)?);
                }
                let refined = refine_p_features(ctx, &train, &built, RefineMode::Evaluate(&test.rows), seed)?;
                for r in &refined.records {
                    push_pf((r.target, Some(r.source)), r.candidate_mape);
                }
                decisions.push(DecisionCell {
                    cluster: series.cluster,
                    family: ctx.family,
                    origin: ORIGIN_FRACTIONS[k],
                    decisions: refined.decisions,
                });
                refined.frame
            }
        };
        let actual = test.column(Variable::Consumed);
        for (i, set) in FeatureSet::ALL.into_iter().enumerate() {
            let f = forecast_consumption(ctx, &train, &frame, set, seed)?;
            cons[i].push(mape(&actual, &f)?);
        }
    }
    Ok(EvaluationReport {
        consumption: FeatureSet::ALL
            .into_iter()
            .zip(cons)
            .map(|(feature_set, m)| ConsumptionCell {
                cluster: series.cluster,
                family: ctx.family,
                feature_set,
                scores: OriginScores::new(m),
            })
            .collect(),
        p_features: pf
            .into_iter()
            .map(|((target, source), m)| PFeatureCell {
                cluster: series.cluster,
                family: ctx.family,
                target,
                source,
                scores: OriginScores::new(m),
            })
            .collect(),
        decisions,
    })
}

/// Every (cluster, family) cell, evaluated in parallel and assembled in
/// input order.
pub fn evaluate(
    series: &[DailyClusterSeries],
    families: &[Family],
    budget: &TuningBudget,
    mode: PMode,
    root_seed: u64,
) -> Result<EvaluationReport> {
    let jobs: Vec<(&DailyClusterSeries, Family)> =
        series.iter().flat_map(|s| families.iter().map(move |f| (s, *f))).collect();
    let parts: Vec<Result<EvaluationReport>> = jobs
        .par_iter()
        .map(|(s, f)| evaluate_cluster(&Ctx::new(*f, budget.clone()), s, mode, root_seed))
        .collect();
    let mut report = EvaluationReport::default();
    for p in parts {
        let p = p?;
        report.consumption.extend(p.consumption);
        report.p_features.extend(p.p_features);
        report.decisions.extend(p.decisions);
    }
    Ok(report)
}

impl EvaluationReport {
    fn families(&self) -> Vec<Family> {
        let mut f: Vec<Family> = self.consumption.iter().map(|c| c.family).collect();
        f.sort();
        f.dedup();
        f
    }

    /// Mean MAPE matrix: one row per (cluster, feature set), one column per family.
    pub fn consumption_csv(&self) -> String {
        let families = self.families();
        let mut out = String::from("cluster,feature_set");
        for f in &families {
            out.push(',');
            out.push_str(f.name());
        }
        out.push('\n');
        let mut clusters: Vec<u32> = self.consumption.iter().map(|c| c.cluster).collect();
        clusters.sort();
        clusters.dedup();
        for c in clusters {
            for set in FeatureSet::ALL {
                out.push_str(&format!("{c},{}", set.name()));
                for f in &families {
                    let cell = self
                        .consumption
                        .iter()
                        .find(|x| x.cluster == c && x.family == *f && x.feature_set == set);
                    out.push(',');
                    if let Some(cell) = cell {
                        out.push_str(&crate::io::fmt_f64(cell.scores.mean));
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Long-format p-feature accuracies.
    pub fn p_feature_csv(&self) -> String {
        let mut out = String::from("cluster,family,target,source,mape_70,mape_80,mape_90,mean_mape\n");
        for p in &self.p_features {
            let m = &p.scores.mapes;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                p.cluster,
                p.family.name(),
                p.target.name(),
                p.source.map_or("base", |s| s.name()),
                crate::io::fmt_f64(m[0]),
                crate::io::fmt_f64(m[1]),
                crate::io::fmt_f64(m[2]),
                crate::io::fmt_f64(p.scores.mean)
            ));
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.consumption
            .iter()
            .map(|c| &c.scores)
            .chain(self.p_features.iter().map(|p| &p.scores))
            .all(|s| s.mean.is_finite() && s.mapes.iter().all(|m| m.is_finite()))
    }
}

/// Decisions for deployment: a replacement is kept when it won at a
/// majority of the evaluation origins.
pub fn deployment_decisions(ctx: &Ctx, series: &DailyClusterSeries, root_seed: u64) -> Result<Decisions> {
    let n = series.len();
    let base_seed = cell_seed(root_seed, series.cluster, ctx.family);
    let mut wins = [0usize; 2];
    let splits = origin_splits(n)?;
    for (k, split) in splits.iter().enumerate() {
        let seed = seed::derive_index(base_seed, k as u64);
        let train = series.slice(0..*split);
        let test = series.slice(*split..n);
        let built = build_p_features(ctx, &train, &FeatureRow::scenario_of(&test), seed)?;
        let refined = refine_p_features(ctx, &train, &built, RefineMode::Evaluate(&test.rows), seed)?;
        for (i, (target, _)) in REFINEMENTS.iter().enumerate() {
            wins[i] += refined.decisions.get(*target) as usize;
        }
    }
    let mut d = Decisions::default();
    for (i, (target, _)) in REFINEMENTS.iter().enumerate() {
        d.set(*target, 2 * wins[i] > splits.len());
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentForecast {
    pub frame: Vec<FeatureRow>,
    pub users: Vec<f64>,
    pub consumed: Vec<f64>,
    pub decisions: Decisions,
}

/// Fits on the whole series and forecasts a scenario that follows it,
/// replaying recorded refinement decisions.
pub fn forecast_scenario(
    ctx: &Ctx,
    series: &DailyClusterSeries,
    scenario: &[FeatureRow],
    set: FeatureSet,
    decisions: Decisions,
    root_seed: u64,
) -> Result<DeploymentForecast> {
    let seed = seed::derive(cell_seed(root_seed, series.cluster, ctx.family), "deploy");
    let built = build_p_features(ctx, series, scenario, seed)?;
    let refined = refine_p_features(ctx, series, &built, RefineMode::Replay(decisions), seed)?;
    let users: Vec<f64> = refined.frame.iter().map(|r| r.p.users.unwrap_or(f64::NAN)).collect();
    let consumed = forecast_consumption(ctx, series, &refined.frame, set, seed)?;
    Ok(DeploymentForecast {
        frame: refined.frame,
        users,
        consumed,
        decisions,
    })
}
