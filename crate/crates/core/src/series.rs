//! Per-cluster day-wise series built from transactions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::calendar::{season_of, Day, Season};
use crate::error::{Error, Result};
use crate::ingest::ChargingTransaction;
use crate::io::fmt_f64;

pub const PERIOD: usize = 7;

/// The numeric day-wise variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    Owners,
    Users,
    Trans,
    Demand,
    Consumed,
}

impl Variable {
    pub const ALL: [Variable; 5] = [
        Variable::Owners,
        Variable::Users,
        Variable::Trans,
        Variable::Demand,
        Variable::Consumed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Owners => "owners",
            Variable::Users => "users",
            Variable::Trans => "trans",
            Variable::Demand => "demand",
            Variable::Consumed => "consumed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub day: Day,
    pub season: Season,
    pub owners: f64,
    pub users: f64,
    pub trans: f64,
    /// Upper bound on energy: sum of battery capacity times sessions.
    pub demand: f64,
    pub consumed: f64,
}

impl DailyRow {
    pub fn get(&self, v: Variable) -> f64 {
        match v {
            Variable::Owners => self.owners,
            Variable::Users => self.users,
            Variable::Trans => self.trans,
            Variable::Demand => self.demand,
            Variable::Consumed => self.consumed,
        }
    }

    pub fn set(&mut self, v: Variable, x: f64) {
        match v {
            Variable::Owners => self.owners = x,
            Variable::Users => self.users = x,
            Variable::Trans => self.trans = x,
            Variable::Demand => self.demand = x,
            Variable::Consumed => self.consumed = x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyClusterSeries {
    pub cluster: u32,
    /// Ordered by date, no duplicates.
    pub rows: Vec<DailyRow>,
}

impl DailyClusterSeries {
    pub fn period(&self) -> usize {
        PERIOD
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, v: Variable) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(v)).collect()
    }

    pub fn is_contiguous(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| (w[1].date - w[0].date).num_days() == 1)
    }

    /// Checks the structural invariants of a freshly built (un-imputed) series.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for w in self.rows.windows(2) {
            if w[1].date <= w[0].date {
                return Err(format!("dates not strictly increasing at {}", w[1].date));
            }
            if w[1].owners < w[0].owners {
                return Err(format!("owners decrease at {}", w[1].date));
            }
        }
        for r in &self.rows {
            if r.users > r.owners || r.users > r.trans {
                return Err(format!("users exceed owners or trans on {}", r.date));
            }
            if r.demand < r.consumed {
                return Err(format!("demand below consumed on {}", r.date));
            }
        }
        Ok(())
    }

    /// A copy restricted to `range` of rows.
    pub fn slice(&self, range: std::ops::Range<usize>) -> DailyClusterSeries {
        DailyClusterSeries {
            cluster: self.cluster,
            rows: self.rows[range].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["date", "day", "season", "owners", "users", "trans", "demand", "consumed"])?;
        for r in &self.rows {
            wr.write_record([
                r.date.to_string(),
                r.day.to_string(),
                r.season.to_string(),
                fmt_f64(r.owners),
                fmt_f64(r.users),
                fmt_f64(r.trans),
                fmt_f64(r.demand),
                fmt_f64(r.consumed),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(cluster: u32, r: R) -> Result<DailyClusterSeries> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.clone();
        let expected = ["date", "day", "season", "owners", "users", "trans", "demand", "consumed"];
        if header.iter().map(str::trim).ne(expected.iter().copied()) {
            return Err(Error::Schema(format!(
                "series header must be `{}`",
                expected.join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Schema(format!("series row {}: bad {what}", i + 1));
            let num = |j: usize, what: &str| -> Result<f64> {
                rec[j].trim().parse::<f64>().map_err(|_| bad(what))
            };
            let date: NaiveDate = rec[0].trim().parse().map_err(|_| bad("date"))?;
            rows.push(DailyRow {
                date,
                day: Day::of(date),
                season: season_of(date),
                owners: num(3, "owners")?,
                users: num(4, "users")?,
                trans: num(5, "trans")?,
                demand: num(6, "demand")?,
                consumed: num(7, "consumed")?,
            });
        }
        if rows.windows(2).any(|w| w[1].date <= w[0].date) {
            return Err(Error::Schema("series dates must be strictly increasing".into()));
        }
        Ok(DailyClusterSeries { cluster, rows })
    }
}

/// Aggregates transactions into one day-wise series per cluster.
///
/// A session counts on the civil date of its plug-in. `owners` is the number
/// of distinct participants of the cluster seen on or before each date. Only
/// dates with at least one session appear; gaps are left for imputation.
pub fn build_daily_series(
    txns: &[ChargingTransaction],
    cluster_map: &BTreeMap<String, u32>,
) -> Result<Vec<DailyClusterSeries>> {
    #[derive(Default)]
    struct DayAcc<'a> {
        participants: BTreeSet<&'a str>,
        trans: usize,
        // Summed in sorted order so the total does not depend on input order.
        consumed: Vec<f64>,
        // battery capacity (bits) -> session count
        sessions_by_capacity: BTreeMap<u64, usize>,
    }

    let mut per_cluster: BTreeMap<u32, BTreeMap<NaiveDate, DayAcc>> = BTreeMap::new();
    for t in txns {
        let cluster = *cluster_map.get(&t.participant_id).ok_or_else(|| {
            Error::invalid(format!("participant `{}` has no cluster", t.participant_id))
        })?;
        let acc = per_cluster
            .entry(cluster)
            .or_default()
            .entry(t.plug_in.date())
            .or_default();
        acc.participants.insert(&t.participant_id);
        acc.trans += 1;
        acc.consumed.push(t.consumed_kwh);
        *acc.sessions_by_capacity.entry(t.car_kwh.to_bits()).or_default() += 1;
    }

    let mut out = Vec::new();
    for (cluster, days) in per_cluster {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut rows = Vec::with_capacity(days.len());
        for (date, mut acc) in days {
            acc.consumed.sort_by(f64::total_cmp);
            for p in &acc.participants {
                seen.insert(p);
            }
            let demand: f64 = acc
                .sessions_by_capacity
                .iter()
                .map(|(bits, n)| f64::from_bits(*bits) * *n as f64)
                .sum();
            rows.push(DailyRow {
                date,
                day: Day::of(date),
                season: season_of(date),
                owners: seen.len() as f64,
                users: acc.participants.len() as f64,
                trans: acc.trans as f64,
                demand,
                consumed: acc.consumed.iter().sum(),
            });
        }
        out.push(DailyClusterSeries { cluster, rows });
    }
    Ok(out)
}
