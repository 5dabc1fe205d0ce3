//! Order statistics and the small set of tests the experiments report.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Index (1-based) of the order statistic used as the level-`alpha` critical value.
pub fn critical_rank(s: usize, alpha: f64) -> usize {
    let k = ((1.0 - alpha) * s as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(s)
}

/// Upper-`alpha` critical value: the `ceil((1 - alpha) s)`-th order statistic.
pub fn critical_value(sample: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty null sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[critical_rank(sorted.len(), alpha) - 1])
}

/// Critical value for an already sorted sample.
pub fn critical_value_sorted(sorted: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if sorted.is_empty() {
        return Err(Error::InsufficientData("empty null sample".into()));
    }
    Ok(sorted[critical_rank(sorted.len(), alpha) - 1])
}

/// Fraction of `values` strictly above `c`.
pub fn exceedance(values: &[f64], c: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| v > c).count() as f64 / values.len() as f64
}

/// Empirical `P[T_null >= t]`.
pub fn empirical_p_value(null: &[f64], t: f64) -> f64 {
    if null.is_empty() {
        return 1.0;
    }
    null.iter().filter(|&&v| v >= t).count() as f64 / null.len() as f64
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mu = mean(v);
    v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn std_error(v: &[f64]) -> f64 {
    (variance(v) / v.len().max(1) as f64).sqrt()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    crate::align::pearson(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Paired t test of `H1: mean(x - y) > 0`.
pub fn paired_t_greater(x: &[f64], y: &[f64]) -> Result<OneSidedTest> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("paired test needs two equal samples of size >= 2".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mu = mean(&d);
    let se = std_error(&d);
    if se == 0.0 {
        let p = if mu > 0.0 { 0.0 } else { 1.0 };
        return Ok(OneSidedTest { statistic: if mu > 0.0 { f64::INFINITY } else { 0.0 }, p_value: p });
    }
    let t = mu / se;
    let dist = StudentsT::new(0.0, 1.0, (d.len() - 1) as f64).map_err(|e| Error::NumericFailure(e.to_string()))?;
    Ok(OneSidedTest { statistic: t, p_value: 1.0 - dist.cdf(t) })
}

/// Welch t test of `H1: mean(x) > mean(y)`.
pub fn welch_t_greater(x: &[f64], y: &[f64]) -> Result<OneSidedTest> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InsufficientData("Welch test needs samples of size >= 2".into()));
    }
    let (vx, vy) = (variance(x) / x.len() as f64, variance(y) / y.len() as f64);
    let diff = mean(x) - mean(y);
    let se = (vx + vy).sqrt();
    if se == 0.0 {
        let p = if diff > 0.0 { 0.0 } else { 1.0 };
        return Ok(OneSidedTest { statistic: if diff > 0.0 { f64::INFINITY } else { 0.0 }, p_value: p });
    }
    let t = diff / se;
    let df = (vx + vy).powi(2) / (vx * vx / (x.len() - 1) as f64 + vy * vy / (y.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::NumericFailure(e.to_string()))?;
    Ok(OneSidedTest { statistic: t, p_value: 1.0 - dist.cdf(t) })
}

/// Wilcoxon rank-sum test of `H1: x` stochastically smaller than `y`, normal
/// approximation with tie correction.
pub fn rank_sum_less(x: &[f64], y: &[f64]) -> Result<OneSidedTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InsufficientData("rank-sum test needs two nonempty samples".into()));
    }
    let mut all: Vec<(f64, usize)> = x.iter().map(|&v| (v, 0)).chain(y.iter().map(|&v| (v, 1))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].iter_mut().for_each(|v| *v = r);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w: f64 = all.iter().zip(&ranks).filter(|(a, _)| a.1 == 0).map(|(_, r)| r).sum();
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = w - f1 * (f1 + 1.0) / 2.0;
    let mu = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
    if var <= 0.0 {
        return Ok(OneSidedTest { statistic: 0.0, p_value: 1.0 });
    }
    let z = (u - mu) / var.sqrt();
    let normal = Normal::standard();
    Ok(OneSidedTest { statistic: z, p_value: normal.cdf(z) })
}
