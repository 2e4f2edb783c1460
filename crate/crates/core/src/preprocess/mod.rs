//! Series preprocessing: STL, gap imputation, outlier treatment, scaling.

pub mod impute;
pub mod outliers;
pub mod scale;
pub mod stl;

pub use impute::{impute_gaps, impute_missing_days, ImputeReport};
pub use outliers::{detect_outliers, replace_outliers, treat_outliers, OutlierReport};
pub use scale::MinMaxScaler;
pub use stl::{stl, stl_with, StlConfig, StlDecomposition};
