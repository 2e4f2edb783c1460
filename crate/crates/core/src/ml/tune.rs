//! Shared pieces of the seeded random-search tuners.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::gbt::time_slice_splits;
use crate::error::{Error, Result};
use crate::seed;

/// Training prefixes grow by one weekly period per slice.
pub const SLICE_STEP: usize = 7;
/// Smallest training prefix a slice may use.
pub const MIN_SLICE_TRAIN: usize = 20;

/// Time-slice layout: `slices` validation windows of `val_len` rows ending at
/// the last row of the tuning data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub val_len: usize,
    pub slices: usize,
}

impl Default for SliceSpec {
    fn default() -> Self {
        SliceSpec { val_len: 14, slices: 4 }
    }
}

impl SliceSpec {
    /// Drops slices when the data is too short for all of them.
    pub fn splits(&self, n: usize) -> Result<Vec<(std::ops::Range<usize>, std::ops::Range<usize>)>> {
        for k in (1..=self.slices.max(1)).rev() {
            let need = self.val_len + SLICE_STEP * (k - 1) + MIN_SLICE_TRAIN;
            if n >= need {
                let initial = n - self.val_len - SLICE_STEP * (k - 1);
                return time_slice_splits(n, initial, self.val_len, SLICE_STEP);
            }
        }
        Err(Error::invalid(format!(
            "{n} rows cannot hold a {}-row validation window after {MIN_SLICE_TRAIN} training rows",
            self.val_len
        )))
    }
}

/// `min(budget, size)` distinct point indices in sampled order.
pub fn candidate_indices(size: usize, budget: usize, seed: u64) -> Vec<usize> {
    let k = budget.max(1).min(size);
    sample(&mut seed::rng(seed), size, k).into_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord<C> {
    pub index: usize,
    pub config: C,
    /// Mean validation MAPE; absent when the only candidate was not scored.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult<C> {
    pub best: C,
    pub trace: Vec<TrialRecord<C>>,
}

impl<C: Clone> TuneResult<C> {
    pub fn unscored(configs: Vec<C>) -> TuneResult<C> {
        let trace: Vec<TrialRecord<C>> = configs
            .into_iter()
            .enumerate()
            .map(|(index, config)| TrialRecord {
                index,
                config,
                score: None,
            })
            .collect();
        TuneResult {
            best: trace[0].config.clone(),
            trace,
        }
    }

    /// Lowest score wins; the earliest trial wins ties.
    pub fn from_trace(trace: Vec<TrialRecord<C>>) -> TuneResult<C> {
        let mut best = 0;
        for (k, t) in trace.iter().enumerate() {
            if let (Some(s), Some(b)) = (t.score, trace[best].score) {
                if s < b {
                    best = k;
                }
            } else if trace[best].score.is_none() && t.score.is_some() {
                best = k;
            }
        }
        TuneResult {
            best: trace[best].config.clone(),
            trace,
        }
    }
}

/// CSV rendering of a tuning trace.
pub fn trace_csv<C>(trace: &[TrialRecord<C>], header: &str, fields: impl Fn(&C) -> String) -> String {
    let mut out = format!("trial,{header},score\n");
    for t in trace {
        let score = t.score.map(crate::io::fmt_f64).unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", t.index, fields(&t.config), score));
    }
    out
}
