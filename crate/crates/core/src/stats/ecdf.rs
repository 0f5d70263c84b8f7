use crate::error::Result;

use super::check_sample;

/// Fraction of `sample` that is `<= x`.
pub fn ecdf_eval(sample: &[f64], x: f64) -> Result<f64> {
    check_sample(sample, "ECDF sample")?;
    let count = sample.iter().filter(|&&v| v <= x).count();
    Ok(count as f64 / sample.len() as f64)
}
