//! One fitted model of any family behind a common fit/forecast surface.

use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Encoder, FeatureRow, PFeature};
use crate::linear::{fit_reg_arima, fit_ts_regression, AutoArimaOptions, LinearModel, RegArimaModel};
use crate::ml::gbt::{fit_gbt, tune_gbt, GbtConfig, GbtModel, GbtSpace, DEFAULT_GBT_BUDGET};
use crate::ml::lstm::{fit_lstm_with, tune_lstm, LstmConfig, LstmModel, LstmSpace, DEFAULT_LSTM_BUDGET, MAX_EPOCHS};
use crate::ml::{SliceSpec, TrialRecord};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    Regression,
    RegArima,
    Gbt,
    Lstm,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Regression, Family::RegArima, Family::Gbt, Family::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            Family::Regression => "regression",
            Family::RegArima => "reg_arima",
            Family::Gbt => "gbt",
            Family::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Search spaces and budgets for the tuned families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningBudget {
    pub gbt_space: GbtSpace,
    pub gbt_budget: usize,
    pub lstm_space: LstmSpace,
    pub lstm_budget: usize,
    pub slices: SliceSpec,
    pub arima: AutoArimaOptions,
}

impl Default for TuningBudget {
    fn default() -> Self {
        TuningBudget {
            gbt_space: GbtSpace::default(),
            gbt_budget: DEFAULT_GBT_BUDGET,
            lstm_space: LstmSpace::default(),
            lstm_budget: DEFAULT_LSTM_BUDGET,
            slices: SliceSpec::default(),
            arima: AutoArimaOptions::default(),
        }
    }
}

impl TuningBudget {
    /// Small budgets for smoke runs on modest hardware.
    pub fn quick() -> TuningBudget {
        TuningBudget {
            gbt_space: GbtSpace {
                rounds: vec![30, 60],
                max_depth: vec![2, 3],
                ..GbtSpace::default()
            },
            gbt_budget: 4,
            lstm_space: LstmSpace {
                depth: vec![1],
                bidirectional: vec![false],
                units: (50, 50),
                epochs: 8,
                ..LstmSpace::default()
            },
            lstm_budget: 1,
            slices: SliceSpec { val_len: 14, slices: 2 },
            arima: AutoArimaOptions {
                max_p: 3,
                max_q: 3,
                ..AutoArimaOptions::default()
            },
        }
    }
}

/// Date span of the rows a model was fitted on, reported to an observer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitEvent {
    pub target: String,
    pub first: NaiveDate,
    pub last: NaiveDate,
}

pub type FitHook = Arc<dyn Fn(&FitEvent) + Send + Sync>;

#[derive(Clone)]
pub struct Ctx {
    pub family: Family,
    pub budget: TuningBudget,
    pub hook: Option<FitHook>,
}

impl Ctx {
    pub fn new(family: Family, budget: TuningBudget) -> Ctx {
        Ctx {
            family,
            budget,
            hook: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Payload {
    Regression(LinearModel),
    RegArima(RegArimaModel),
    Gbt(GbtModel),
    Lstm(LstmModel),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub loss_curve: Vec<f64>,
    pub gbt_trace: Vec<TrialRecord<GbtConfig>>,
    pub lstm_trace: Vec<TrialRecord<LstmConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForecaster {
    pub family: Family,
    pub target: String,
    pub columns: Vec<String>,
    pub encoder: Encoder,
    pub payload: Payload,
    pub report: TrainingReport,
}

pub fn fit_forecaster(
    ctx: &Ctx,
    target: &str,
    train: &[FeatureRow],
    y: &[f64],
    p_features: &[PFeature],
    seed: u64,
) -> Result<TrainedForecaster> {
    if train.len() != y.len() {
        return Err(Error::invalid("training rows and target differ in length"));
    }
    if let (Some(hook), Some(first), Some(last)) = (&ctx.hook, train.first(), train.last()) {
        hook(&FitEvent {
            target: target.to_string(),
            first: first.date,
            last: last.date,
        });
    }
    let encoder = Encoder::fit(train, p_features)?;
    let design = encoder.encode(train)?;
    let b = &ctx.budget;
    let mut report = TrainingReport::default();
    let payload = match ctx.family {
        Family::Regression => Payload::Regression(fit_ts_regression(&design, y)?),
        Family::RegArima => Payload::RegArima(fit_reg_arima(&design, y, &b.arima)?),
        Family::Gbt => {
            let tuned = tune_gbt(&design, y, &b.gbt_space, b.gbt_budget, &b.slices, seed::derive(seed, "gbt"))?;
            let model = fit_gbt(&design, y, &tuned.best)?;
            report.loss_curve = model.train_loss.clone();
            report.gbt_trace = tuned.trace;
            Payload::Gbt(model)
        }
        Family::Lstm => {
            let tuned = tune_lstm(&design, y, &b.lstm_space, b.lstm_budget, &b.slices, seed::derive(seed, "lstm"))?;
            let model = fit_lstm_with(&design, y, &tuned.best, MAX_EPOCHS)?;
            report.loss_curve = model.loss_curve.clone();
            report.lstm_trace = tuned.trace;
            Payload::Lstm(model)
        }
    };
    Ok(TrainedForecaster {
        family: ctx.family,
        target: target.to_string(),
        columns: design.columns,
        encoder,
        payload,
        report,
    })
}

impl TrainedForecaster {
    /// Forecasts rows that directly follow the training span.
    pub fn forecast(&self, rows: &[FeatureRow]) -> Result<Vec<f64>> {
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let design = self.encoder.encode(rows)?;
        design.check_columns(&self.columns)?;
        match &self.payload {
            Payload::Regression(m) => m.predict(&design),
            Payload::RegArima(m) => m.forecast(&design),
            Payload::Gbt(m) => m.predict(&design),
            Payload::Lstm(m) => m.predict(&design),
        }
    }
}
