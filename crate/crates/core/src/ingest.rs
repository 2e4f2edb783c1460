//! Parsing, validation and cleaning of raw charging transactions.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialStage {
    Uncontrolled,
    T1,
    T2,
    T3,
}

impl TrialStage {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStage::Uncontrolled => "Uncontrolled",
            TrialStage::T1 => "T1",
            TrialStage::T2 => "T2",
            TrialStage::T3 => "T3",
        }
    }
}

impl FromStr for TrialStage {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "uncontrolled" | "u" | "0" => Ok(TrialStage::Uncontrolled),
            "t1" | "trial1" | "1" => Ok(TrialStage::T1),
            "t2" | "trial2" | "2" => Ok(TrialStage::T2),
            "t3" | "trial3" | "3" => Ok(TrialStage::T3),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EvType {
    Bev,
    Phev,
    Rex,
}

impl EvType {
    pub fn as_str(self) -> &'static str {
        match self {
            EvType::Bev => "BEV",
            EvType::Phev => "PHEV",
            EvType::Rex => "REX",
        }
    }
}

impl FromStr for EvType {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BEV" => Ok(EvType::Bev),
            "PHEV" => Ok(EvType::Phev),
            "REX" | "REEV" | "EREV" => Ok(EvType::Rex),
            _ => Err(()),
        }
    }
}

/// One charging session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingTransaction {
    pub charger_id: String,
    pub participant_id: String,
    /// Charger/vehicle power rating, kW.
    pub car_kw: f64,
    /// Battery capacity, kWh.
    pub car_kwh: f64,
    pub group_id: String,
    pub trial_stage: TrialStage,
    pub plug_in: NaiveDateTime,
    pub plug_out: NaiveDateTime,
    pub consumed_kwh: f64,
    pub active_start: NaiveDateTime,
    pub car_make: String,
    pub car_model: String,
    pub ev_type: EvType,
}

impl ChargingTransaction {
    /// Checks the record-level invariants, returning the first violated reason code.
    pub fn violation(&self) -> Option<RejectReason> {
        if !(self.car_kwh > 0.0) || !self.car_kwh.is_finite() {
            return Some(RejectReason::NonPositiveCapacity);
        }
        if !(self.car_kw > 0.0) || !self.car_kw.is_finite() {
            return Some(RejectReason::NonPositiveRating);
        }
        if self.plug_out < self.plug_in {
            return Some(RejectReason::TimeOrder);
        }
        if self.active_start < self.plug_in || self.active_start > self.plug_out {
            return Some(RejectReason::ActiveStartOutOfRange);
        }
        if !(self.consumed_kwh >= 0.0) || !self.consumed_kwh.is_finite() {
            return Some(RejectReason::NegativeConsumption);
        }
        if self.consumed_kwh > self.car_kwh {
            return Some(RejectReason::ConsumptionExceedsCapacity);
        }
        None
    }
}

/// The thirteen transaction columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    ChargerId,
    ParticipantId,
    CarKw,
    CarKwh,
    GroupId,
    TrialStage,
    PlugIn,
    PlugOut,
    ConsumedKwh,
    ActiveStart,
    CarMake,
    CarModel,
    EvType,
}

impl Field {
    pub const ALL: [Field; 13] = [
        Field::ChargerId,
        Field::ParticipantId,
        Field::CarKw,
        Field::CarKwh,
        Field::GroupId,
        Field::TrialStage,
        Field::PlugIn,
        Field::PlugOut,
        Field::ConsumedKwh,
        Field::ActiveStart,
        Field::CarMake,
        Field::CarModel,
        Field::EvType,
    ];

    pub fn default_column(self) -> &'static str {
        match self {
            Field::ChargerId => "charger_id",
            Field::ParticipantId => "participant_id",
            Field::CarKw => "car_kw",
            Field::CarKwh => "car_kwh",
            Field::GroupId => "group_id",
            Field::TrialStage => "trial_stage",
            Field::PlugIn => "plug_in",
            Field::PlugOut => "plug_out",
            Field::ConsumedKwh => "consumed_kwh",
            Field::ActiveStart => "active_start",
            Field::CarMake => "car_make",
            Field::CarModel => "car_model",
            Field::EvType => "ev_type",
        }
    }

    /// Make and model may be blank; everything else feeds downstream math or grouping.
    fn optional(self) -> bool {
        matches!(self, Field::CarMake | Field::CarModel)
    }
}

/// Maps each field to the header name used in the source file.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    names: HashMap<Field, String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            names: Field::ALL
                .iter()
                .map(|f| (*f, f.default_column().to_string()))
                .collect(),
        }
    }
}

impl ColumnMap {
    pub fn with(mut self, field: Field, column: impl Into<String>) -> Self {
        self.names.insert(field, column.into());
        self
    }

    pub fn column(&self, field: Field) -> &str {
        &self.names[&field]
    }

    /// Resolves header positions; every field must be present.
    fn resolve(&self, header: &csv::StringRecord) -> Result<HashMap<Field, usize>> {
        let mut idx = HashMap::new();
        let mut missing = Vec::new();
        for f in Field::ALL {
            let name = self.column(f);
            match header.iter().position(|h| h.trim() == name) {
                Some(i) => {
                    idx.insert(f, i);
                }
                None => missing.push(name.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(idx)
        } else {
            Err(Error::Schema(format!(
                "header is missing column(s): {}",
                missing.join(", ")
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RejectReason {
    TimeOrder,
    ActiveStartOutOfRange,
    NegativeConsumption,
    ConsumptionExceedsCapacity,
    NonPositiveCapacity,
    NonPositiveRating,
    MissingField(String),
    BadNumber(String),
    BadTimestamp(String),
    BadEnum(String),
    Malformed(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::TimeOrder => f.write_str("time-order"),
            RejectReason::ActiveStartOutOfRange => f.write_str("active-start-out-of-range"),
            RejectReason::NegativeConsumption => f.write_str("negative-consumption"),
            RejectReason::ConsumptionExceedsCapacity => f.write_str("consumption-exceeds-capacity"),
            RejectReason::NonPositiveCapacity => f.write_str("non-positive-capacity"),
            RejectReason::NonPositiveRating => f.write_str("non-positive-rating"),
            RejectReason::MissingField(c) => write!(f, "missing-field:{c}"),
            RejectReason::BadNumber(c) => write!(f, "bad-number:{c}"),
            RejectReason::BadTimestamp(c) => write!(f, "bad-timestamp:{c}"),
            RejectReason::BadEnum(c) => write!(f, "bad-enum:{c}"),
            RejectReason::Malformed(m) => write!(f, "malformed:{m}"),
        }
    }
}

impl From<RejectReason> for String {
    fn from(r: RejectReason) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for RejectReason {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t.to_string())),
            None => (s.as_str(), None),
        };
        Ok(match (head, tail) {
            ("time-order", None) => RejectReason::TimeOrder,
            ("active-start-out-of-range", None) => RejectReason::ActiveStartOutOfRange,
            ("negative-consumption", None) => RejectReason::NegativeConsumption,
            ("consumption-exceeds-capacity", None) => RejectReason::ConsumptionExceedsCapacity,
            ("non-positive-capacity", None) => RejectReason::NonPositiveCapacity,
            ("non-positive-rating", None) => RejectReason::NonPositiveRating,
            ("missing-field", Some(c)) => RejectReason::MissingField(c),
            ("bad-number", Some(c)) => RejectReason::BadNumber(c),
            ("bad-timestamp", Some(c)) => RejectReason::BadTimestamp(c),
            ("bad-enum", Some(c)) => RejectReason::BadEnum(c),
            ("malformed", Some(m)) => RejectReason::Malformed(m),
            _ => return Err(format!("unknown reject reason `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RejectReport {
    pub rejects: Vec<Reject>,
}

impl RejectReport {
    pub fn len(&self) -> usize {
        self.rejects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejects.is_empty()
    }

    /// One `{"row":..,"reason":..}` object per line.
    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.rejects {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

fn parse_row(
    rec: &csv::StringRecord,
    idx: &HashMap<Field, usize>,
    map: &ColumnMap,
) -> std::result::Result<ChargingTransaction, RejectReason> {
    let text = |f: Field| -> std::result::Result<String, RejectReason> {
        let v = rec.get(idx[&f]).unwrap_or("").trim();
        if v.is_empty() && !f.optional() {
            Err(RejectReason::MissingField(map.column(f).to_string()))
        } else {
            Ok(v.to_string())
        }
    };
    let number = |f: Field| -> std::result::Result<f64, RejectReason> {
        let v = text(f)?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| RejectReason::BadNumber(map.column(f).to_string()))
    };
    let stamp = |f: Field| -> std::result::Result<NaiveDateTime, RejectReason> {
        parse_timestamp(&text(f)?).ok_or_else(|| RejectReason::BadTimestamp(map.column(f).to_string()))
    };

    let trial_stage = text(Field::TrialStage)?
        .parse()
        .map_err(|_| RejectReason::BadEnum(map.column(Field::TrialStage).to_string()))?;
    let ev_type = text(Field::EvType)?
        .parse()
        .map_err(|_| RejectReason::BadEnum(map.column(Field::EvType).to_string()))?;

    let txn = ChargingTransaction {
        charger_id: text(Field::ChargerId)?,
        participant_id: text(Field::ParticipantId)?,
        car_kw: number(Field::CarKw)?,
        car_kwh: number(Field::CarKwh)?,
        group_id: text(Field::GroupId)?,
        trial_stage,
        plug_in: stamp(Field::PlugIn)?,
        plug_out: stamp(Field::PlugOut)?,
        consumed_kwh: number(Field::ConsumedKwh)?,
        active_start: stamp(Field::ActiveStart)?,
        car_make: text(Field::CarMake)?,
        car_model: text(Field::CarModel)?,
        ev_type,
    };
    match txn.violation() {
        Some(reason) => Err(reason),
        None => Ok(txn),
    }
}

/// Parses comma-delimited transactions. A bad header is fatal; bad rows are
/// collected in the reject report.
pub fn parse_transactions<R: Read>(
    source: R,
    map: &ColumnMap,
) -> Result<(Vec<ChargingTransaction>, RejectReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let idx = map.resolve(&header)?;

    let mut out = Vec::new();
    let mut report = RejectReport::default();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.rejects.push(Reject {
                    row,
                    reason: RejectReason::Malformed(e.to_string().replace(':', ";")),
                });
                continue;
            }
        };
        if rec.len() != header.len() {
            report.rejects.push(Reject {
                row,
                reason: RejectReason::Malformed("column-count".into()),
            });
            continue;
        }
        match parse_row(&rec, &idx, map) {
            Ok(t) => out.push(t),
            Err(reason) => report.rejects.push(Reject { row, reason }),
        }
    }
    Ok((out, report))
}

fn fmt_number(x: f64) -> String {
    // Shortest representation that round-trips.
    format!("{x}")
}

/// Writes transactions with the default column names.
pub fn write_transactions<W: Write>(w: W, txns: &[ChargingTransaction]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(Field::ALL.iter().map(|f| f.default_column()))?;
    for t in txns {
        wr.write_record([
            t.charger_id.clone(),
            t.participant_id.clone(),
            fmt_number(t.car_kw),
            fmt_number(t.car_kwh),
            t.group_id.clone(),
            t.trial_stage.as_str().to_string(),
            t.plug_in.format(TIMESTAMP_FORMAT).to_string(),
            t.plug_out.format(TIMESTAMP_FORMAT).to_string(),
            fmt_number(t.consumed_kwh),
            t.active_start.format(TIMESTAMP_FORMAT).to_string(),
            t.car_make.clone(),
            t.car_model.clone(),
            t.ev_type.as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Drops trial-3 sessions (incentive-biased), preserving order.
pub fn clean_trial_data(txns: Vec<ChargingTransaction>) -> Vec<ChargingTransaction> {
    txns.into_iter()
        .filter(|t| t.trial_stage != TrialStage::T3)
        .collect()
}
