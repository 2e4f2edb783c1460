//! Scenario rows and their numeric encoding.
//!
//! Layout of an encoded row: scaled owners, six day indicators (Monday is the
//! reference level), three season indicators (Winter is the reference level),
//! then any scaled p-feature columns in the order requested.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{season_of, Day, Season};
use crate::error::{Error, Result};
use crate::preprocess::MinMaxScaler;
use crate::series::{DailyClusterSeries, DailyRow};

/// A forecast of a dropped original feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PFeature {
    Users,
    Trans,
    Demand,
}

impl PFeature {
    pub const ALL: [PFeature; 3] = [PFeature::Users, PFeature::Trans, PFeature::Demand];

    pub fn name(self) -> &'static str {
        match self {
            PFeature::Users => "p_users",
            PFeature::Trans => "p_trans",
            PFeature::Demand => "p_demand",
        }
    }

    /// Daily-series variable this p-feature stands in for.
    pub fn source(self) -> crate::series::Variable {
        use crate::series::Variable;
        match self {
            PFeature::Users => Variable::Users,
            PFeature::Trans => Variable::Trans,
            PFeature::Demand => Variable::Demand,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PValues {
    pub users: Option<f64>,
    pub trans: Option<f64>,
    pub demand: Option<f64>,
}

impl PValues {
    pub fn get(&self, f: PFeature) -> Option<f64> {
        match f {
            PFeature::Users => self.users,
            PFeature::Trans => self.trans,
            PFeature::Demand => self.demand,
        }
    }

    pub fn set(&mut self, f: PFeature, v: Option<f64>) {
        match f {
            PFeature::Users => self.users = v,
            PFeature::Trans => self.trans = v,
            PFeature::Demand => self.demand = v,
        }
    }
}

/// One day of scenario input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub date: NaiveDate,
    pub owners: f64,
    pub day: Day,
    pub season: Season,
    pub p: PValues,
}

impl FeatureRow {
    pub fn new(date: NaiveDate, owners: f64) -> FeatureRow {
        FeatureRow {
            date,
            owners,
            day: Day::of(date),
            season: season_of(date),
            p: PValues::default(),
        }
    }

    /// Scenario part of a series row; the true o-features become the
    /// p-values ("oracle" p-features).
    pub fn from_daily(r: &DailyRow) -> FeatureRow {
        FeatureRow {
            date: r.date,
            owners: r.owners,
            day: r.day,
            season: r.season,
            p: PValues {
                users: Some(r.users),
                trans: Some(r.trans),
                demand: Some(r.demand),
            },
        }
    }

    pub fn scenario_of(series: &DailyClusterSeries) -> Vec<FeatureRow> {
        series
            .rows
            .iter()
            .map(|r| FeatureRow {
                p: PValues::default(),
                ..FeatureRow::from_daily(r)
            })
            .collect()
    }
}

/// Encoded design matrix (row-major, no intercept column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn from_columns(names: &[&str], cols: &[Vec<f64>]) -> Design {
        let n = cols.first().map_or(0, |c| c.len());
        Design {
            columns: names.iter().map(|s| s.to_string()).collect(),
            rows: (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
        }
    }

    pub fn check_columns(&self, expected: &[String]) -> Result<()> {
        if self.columns != expected {
            return Err(Error::Schema(format!(
                "feature descriptor mismatch: model expects {:?}, got {:?}",
                expected, self.columns
            )));
        }
        Ok(())
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Design {
        Design {
            columns: self.columns.clone(),
            rows: self.rows[range].to_vec(),
        }
    }
}

pub fn descriptor(p_features: &[PFeature]) -> Vec<String> {
    let mut cols = vec!["owners".to_string()];
    cols.extend(Day::ALL[1..].iter().map(|d| format!("day_{}", d.as_str().to_lowercase())));
    cols.extend(Season::ALL[1..].iter().map(|s| format!("season_{}", s.as_str().to_lowercase())));
    cols.extend(p_features.iter().map(|p| p.name().to_string()));
    cols
}

/// Feature encoder with scalers fitted on a training span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub p_features: Vec<PFeature>,
    pub owners: MinMaxScaler,
    pub p_scalers: Vec<MinMaxScaler>,
}

impl Encoder {
    /// Fits scalers on `train`, which must carry every requested p-value.
    pub fn fit(train: &[FeatureRow], p_features: &[PFeature]) -> Result<Encoder> {
        if train.is_empty() {
            return Err(Error::invalid("cannot fit an encoder on no rows"));
        }
        let owners = MinMaxScaler::fit_or_unit(&train.iter().map(|r| r.owners).collect::<Vec<_>>());
        let mut p_scalers = Vec::new();
        for &f in p_features {
            let col = p_column(train, f)?;
            p_scalers.push(MinMaxScaler::fit_or_unit(&col));
        }
        Ok(Encoder {
            p_features: p_features.to_vec(),
            owners,
            p_scalers,
        })
    }

    pub fn columns(&self) -> Vec<String> {
        descriptor(&self.p_features)
    }

    pub fn width(&self) -> usize {
        10 + self.p_features.len()
    }

    pub fn encode_row(&self, r: &FeatureRow) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(self.width());
        x.push(self.owners.apply(r.owners));
        for d in &Day::ALL[1..] {
            x.push(if r.day == *d { 1.0 } else { 0.0 });
        }
        for s in &Season::ALL[1..] {
            x.push(if r.season == *s { 1.0 } else { 0.0 });
        }
        for (f, sc) in self.p_features.iter().zip(&self.p_scalers) {
            let v = r
                .p
                .get(*f)
                .ok_or_else(|| Error::Schema(format!("missing p-feature column {}", f.name())))?;
            x.push(sc.apply(v));
        }
        Ok(x)
    }

    pub fn encode(&self, rows: &[FeatureRow]) -> Result<Design> {
        Ok(Design {
            columns: self.columns(),
            rows: rows.iter().map(|r| self.encode_row(r)).collect::<Result<_>>()?,
        })
    }
}

fn p_column(rows: &[FeatureRow], f: PFeature) -> Result<Vec<f64>> {
    rows.iter()
        .map(|r| {
            r.p.get(f)
                .ok_or_else(|| Error::Schema(format!("missing p-feature column {}", f.name())))
        })
        .collect()
}
