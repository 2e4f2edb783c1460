//! Missing-day imputation: seasonally adjust, interpolate, re-seasonalise.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::stl::{stl_with, StlConfig};
use crate::calendar::{season_of, Day};
use crate::error::{Error, Result};
use crate::series::{DailyClusterSeries, DailyRow, Variable, PERIOD};

const MAX_REFINEMENTS: usize = 100;

/// Linear interpolation over `None` entries; flat beyond the first/last
/// observation.
pub fn interpolate_linear(values: &[Option<f64>]) -> Result<Vec<f64>> {
    let observed: Vec<usize> = (0..values.len()).filter(|i| values[*i].is_some()).collect();
    let (&first, &last) = match (observed.first(), observed.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::invalid("cannot interpolate an all-missing series")),
    };
    let mut out = vec![0.0; values.len()];
    for (i, v) in out.iter_mut().enumerate().take(first) {
        let _ = i;
        *v = values[first].unwrap();
    }
    for w in observed.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (values[a].unwrap(), values[b].unwrap());
        out[a] = ya;
        for i in a + 1..b {
            let f = (i - a) as f64 / (b - a) as f64;
            out[i] = ya + f * (yb - ya);
        }
    }
    out[last] = values[last].unwrap();
    for v in out.iter_mut().skip(last + 1) {
        *v = values[last].unwrap();
    }
    Ok(out)
}

/// Fills gaps in a regularly spaced series.
///
/// 1. a periodic STL (fitted on the series with gaps bridged) gives the
///    seasonal component and the seasonally adjusted observations;
/// 2. the adjusted series is linearly interpolated across the gaps;
/// 3. the seasonal component is added back at the gap positions.
///
/// The bridge used for fitting is refined with the imputed values until it
/// stops changing. Observed values are returned untouched.
pub fn impute_gaps(values: &[Option<f64>], period: usize) -> Result<Vec<f64>> {
    let n_obs = values.iter().filter(|v| v.is_some()).count();
    if n_obs == 0 {
        return Err(Error::invalid("cannot impute an all-missing series"));
    }
    if n_obs < 2 {
        return Err(Error::invalid("imputation needs at least two observed points"));
    }
    let mut filled = interpolate_linear(values)?;
    if n_obs == values.len() || values.len() < 2 * period {
        return Ok(filled);
    }
    let scale = values.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    for _ in 0..MAX_REFINEMENTS {
        let dec = stl_with(&filled, &StlConfig::screening(period))?;
        let adjusted: Vec<Option<f64>> = values
            .iter()
            .zip(&dec.seasonal)
            .map(|(v, s)| v.map(|v| v - s))
            .collect();
        let bridge = interpolate_linear(&adjusted)?;
        let mut change = 0.0f64;
        for i in 0..values.len() {
            if values[i].is_none() {
                let next = bridge[i] + dec.seasonal[i];
                change = change.max((next - filled[i]).abs());
                filled[i] = next;
            }
        }
        if change <= 1e-13 * scale {
            break;
        }
    }
    Ok(filled)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputeReport {
    pub imputed_days: usize,
    pub imputed_dates: Vec<NaiveDate>,
}

/// Makes a day-wise series contiguous. Missing days keep the running owners
/// count (owners only change on days with sessions); the other variables are
/// imputed by [`impute_gaps`] and floored at zero.
pub fn impute_missing_days(series: &DailyClusterSeries) -> Result<(DailyClusterSeries, ImputeReport)> {
    if series.rows.len() < 2 {
        return Err(Error::invalid("imputation needs at least two observed days"));
    }
    let start = series.rows[0].date;
    let end = series.rows[series.rows.len() - 1].date;
    let n = (end - start).num_days() as usize + 1;
    let mut slots: Vec<Option<&DailyRow>> = vec![None; n];
    for r in &series.rows {
        slots[(r.date - start).num_days() as usize] = Some(r);
    }
    let mut report = ImputeReport::default();
    if series.rows.len() == n {
        return Ok((series.clone(), report));
    }

    let mut rows: Vec<DailyRow> = Vec::with_capacity(n);
    let mut owners = 0.0;
    for (i, slot) in slots.iter().enumerate() {
        let date = start + chrono::Duration::days(i as i64);
        match slot {
            Some(r) => {
                owners = r.owners;
                rows.push((*r).clone());
            }
            None => {
                report.imputed_dates.push(date);
                rows.push(DailyRow {
                    date,
                    day: Day::of(date),
                    season: season_of(date),
                    owners,
                    users: 0.0,
                    trans: 0.0,
                    demand: 0.0,
                    consumed: 0.0,
                });
            }
        }
    }
    report.imputed_days = report.imputed_dates.len();

    for v in [Variable::Users, Variable::Trans, Variable::Demand, Variable::Consumed] {
        let column: Vec<Option<f64>> = slots.iter().map(|s| s.map(|r| r.get(v))).collect();
        let filled = impute_gaps(&column, PERIOD)?;
        for (i, row) in rows.iter_mut().enumerate() {
            if slots[i].is_none() {
                row.set(v, filled[i].max(0.0));
            }
        }
    }
    Ok((
        DailyClusterSeries {
            cluster: series.cluster,
            rows,
        },
        report,
    ))
}
