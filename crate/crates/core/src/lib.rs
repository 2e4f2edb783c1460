//! Scenario-based forecasting of daily EV users and energy consumption, and
//! peak-hour impact simulation on a distribution transformer.
//!
//! The crate is organised bottom-up:
//!
//! * [`ingest`] parses and cleans raw charging transactions.
//! * [`clustering`] summarises owners and groups them by battery behaviour.
//! * [`series`] turns transactions into per-cluster day-wise series.
//! * [`preprocess`] holds STL, gap imputation, outlier treatment and scaling.
//! * [`linear`] and [`ml`] are the four model families.
//! * [`pipeline`] is the nested p-feature orchestrator and evaluation harness.
//! * [`synth`] generates calibrated synthetic trials.
//! * [`impact`] sweeps forecasts through a feeder/transformer model.

pub mod calendar;
pub mod clustering;
pub mod error;
pub mod impact;
pub mod ingest;
pub mod io;
pub mod features;
pub mod linear;
pub mod metrics;
pub mod ml;
pub mod optim;
pub mod pipeline;
pub mod preprocess;
pub mod seed;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
