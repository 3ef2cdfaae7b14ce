//! Distances between discrete fronts.

use crate::error::{check_len, Error, Result};

/// `max_{y in reference} min_{x in approx} ||x - y||`.
pub fn coverage(approx: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    if approx.is_empty() || reference.is_empty() {
        return Err(Error::InvalidInput("coverage needs two nonempty point sets".into()));
    }
    let k = reference[0].len();
    for p in approx.iter().chain(reference) {
        check_len(k, p.len())?;
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    Ok(reference
        .iter()
        .map(|y| approx.iter().map(|x| dist(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}
