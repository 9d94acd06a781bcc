//! Error metrics and normalization.

use crate::error::{Error, Result};

const MODULE: &str = "core";

/// Mean absolute percentage error, in percent.
///
/// Every actual value must be strictly positive; nonpositive actuals are an
/// error rather than being skipped, so the denominator never changes behind
/// the caller's back.
pub fn mape(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::contract(
            MODULE,
            format!("mape: {} predictions vs {} actuals", predicted.len(), actual.len()),
        ));
    }
    if actual.is_empty() {
        return Err(Error::contract(MODULE, "mape: empty input"));
    }
    let mut sum = 0.0;
    for (i, (&p, &a)) in predicted.iter().zip(actual).enumerate() {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::domain(
                MODULE,
                format!("mape undefined: actual[{i}] = {a} is not strictly positive"),
            ));
        }
        sum += (p - a).abs() / a;
    }
    Ok(100.0 * sum / actual.len() as f64)
}

/// Standardize to mean 0 and population standard deviation 1.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::contract(MODULE, "zscore: need at least two values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::domain(MODULE, "zscore: zero variance"));
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}
