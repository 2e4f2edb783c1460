use crate::error::{Error, Result};

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    if actual.len() != forecast.len() {
        return Err(Error::invalid(format!(
            "mape needs equal lengths, got {} and {}",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::invalid("mape of an empty vector"));
    }
    let mut sum = 0.0;
    for (i, (a, f)) in actual.iter().zip(forecast).enumerate() {
        if *a == 0.0 {
            return Err(Error::invalid(format!("mape undefined: actual value at index {i} is zero")));
        }
        // Scaling before dividing keeps whole-percent errors exact.
        sum += 100.0 * (a - f).abs() / a.abs();
    }
    Ok(sum / actual.len() as f64)
}

pub fn mse(actual: &[f64], forecast: &[f64]) -> f64 {
    actual.iter().zip(forecast).map(|(a, f)| (a - f).powi(2)).sum::<f64>() / actual.len().max(1) as f64
}
