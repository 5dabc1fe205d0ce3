//! Elbow selection on a scree by a two-group Gaussian profile likelihood.

use crate::{Error, Result};

fn sum_sq_dev(v: &[f64]) -> f64 {
    let mu = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mu).powi(2)).sum()
}

/// Profile log-likelihood (up to constants) of splitting after the first
/// `q` values: separate means, one pooled variance.
pub fn profile_log_likelihood(scree: &[f64], q: usize) -> f64 {
    let p = scree.len() as f64;
    let var = (sum_sq_dev(&scree[..q]) + sum_sq_dev(&scree[q..])) / p;
    if var <= 0.0 {
        f64::INFINITY
    } else {
        -0.5 * p * var.ln()
    }
}

/// Number of leading values before the elbow. Ties go to the smallest split.
pub fn zhu_ghodsi_dimension(scree: &[f64]) -> Result<usize> {
    if scree.len() < 3 {
        return Err(Error::TooFewValues(scree.len()));
    }
    if scree.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("scree values must be finite".into()));
    }
    let mut best = (1, f64::NEG_INFINITY);
    for q in 1..scree.len() {
        let l = profile_log_likelihood(scree, q);
        if l > best.1 {
            best = (q, l);
        }
    }
    Ok(best.0)
}
