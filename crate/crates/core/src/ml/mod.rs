//! Gradient-boosted trees and LSTM networks with their random-search tuners.

pub mod gbt;
pub mod lstm;
pub mod tune;

pub use gbt::{fit_gbt, time_slice_splits, tune_gbt, GbtConfig, GbtModel, GbtSpace, TreeNode};
pub use lstm::{fit_lstm, grad_check, tune_lstm, LstmConfig, LstmModel, LstmSpace, Network};
pub use tune::{SliceSpec, TrialRecord, TuneResult};
