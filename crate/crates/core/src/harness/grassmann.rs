//! Subspace distance between the two separately embedded conditions.

use serde::{Deserialize, Serialize};

use super::power::{conditional_powers, run_replicate, PowerConfig};
use super::stats::{self, OneSidedTest};
use crate::exec::Executor;
use crate::linalg::{self, Matrix};
use crate::pipelines::{FittedMatcher, MatcherSpec, Method};
use crate::simgen::MatchedDataset;
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// `2 sin(theta / 2)` for the largest principal angle `theta` between the
/// column spaces of `a` and `b`.
pub fn grassmann_hausdorff(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let m = a.ncols();
    let (qa, ra) = linalg::orthonormal_basis(a, RANK_TOL);
    let (qb, rb) = linalg::orthonormal_basis(b, RANK_TOL);
    if ra < m || rb < m {
        return Err(Error::RankDeficient { rank: ra.min(rb), m });
    }
    let s = (qa.transpose() * qb).singular_values();
    let cos_max_angle = s.iter().cloned().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    Ok((2.0 * (1.0 - cos_max_angle)).max(0.0).sqrt())
}

/// Ambient directions spanned by one condition's pm embedding: the
/// cross-product of the centered observations with the centered
/// configuration (`ambient x m`).
pub fn ambient_subspace(points: &Matrix, config: &Matrix) -> Matrix {
    let (x, _) = linalg::center_columns(points);
    let (y, _) = linalg::center_columns(config);
    x.transpose() * y
}

/// Grassmann distance between the ambient subspaces of the two
/// pre-alignment pm configurations.
pub fn pm_subspace_distance(fitted: &FittedMatcher, data: &MatchedDataset) -> Result<f64> {
    let raw = fitted
        .pre_alignment()
        .ok_or_else(|| Error::InvalidParams("subspace diagnostic needs a pm matcher".into()))?;
    let a = ambient_subspace(&data.condition_matrix(0), raw[0].coords());
    let b = ambient_subspace(&data.condition_matrix(1), raw[1].coords());
    grassmann_hausdorff(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrassmannRecord {
    pub replicate: usize,
    pub hausdorff: f64,
    pub comm_error: f64,
    pub cond_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    pub power: PowerConfig,
    /// Level at which conditional power is reported.
    pub alpha: f64,
    /// Fraction of replicates in each tail group of the decile comparison.
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrassmannDiagnostic {
    pub records: Vec<GrassmannRecord>,
    pub correlation: f64,
    /// Mean Hausdorff distance in the lowest and highest conditional-power groups.
    pub low_power_hausdorff: f64,
    pub high_power_hausdorff: f64,
    /// Welch test that the low-power group has the larger mean distance.
    pub tail_test: Option<OneSidedTest>,
}

/// Per-replicate pm diagnostics on fresh training sets.
pub fn diagnose(spec: &MatcherSpec, cfg: &DiagnoseConfig, seed: u64, exec: &Executor) -> Result<GrassmannDiagnostic> {
    if spec.method != Method::Pm {
        return Err(Error::InvalidParams("the Grassmann diagnostic applies to pm".into()));
    }
    let mut power = cfg.power.clone();
    power.alphas = vec![cfg.alpha];
    power.validate()?;
    if !(cfg.tail_fraction > 0.0 && cfg.tail_fraction <= 0.5) {
        return Err(Error::InvalidParams("tail_fraction must lie in (0, 0.5]".into()));
    }
    let specs = [spec.clone()];
    let outcomes = exec.try_map(power.n_mc, |r| run_replicate(&specs, &power, r, seed, true))?;
    let powers = conditional_powers(&outcomes, 0, &power.alphas, power.null_mode)?;
    let records: Vec<GrassmannRecord> = outcomes
        .iter()
        .zip(&powers)
        .enumerate()
        .map(|(replicate, (o, p))| GrassmannRecord {
            replicate,
            hausdorff: o[0].hausdorff.unwrap_or(f64::NAN),
            comm_error: o[0].errors.commensurability_01(),
            cond_power: p[0],
        })
        .collect();
    let h: Vec<f64> = records.iter().map(|r| r.hausdorff).collect();
    let c: Vec<f64> = records.iter().map(|r| r.comm_error).collect();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&i, &j| records[i].cond_power.total_cmp(&records[j].cond_power).then(i.cmp(&j)));
    let g = ((records.len() as f64 * cfg.tail_fraction).round() as usize).max(1);
    let low: Vec<f64> = order[..g.min(order.len())].iter().map(|&i| h[i]).collect();
    let high: Vec<f64> = order[order.len().saturating_sub(g)..].iter().map(|&i| h[i]).collect();
    Ok(GrassmannDiagnostic {
        correlation: stats::pearson(&h, &c),
        low_power_hausdorff: stats::mean(&low),
        high_power_hausdorff: stats::mean(&high),
        tail_test: stats::welch_t_greater(&low, &high).ok(),
        records,
    })
}
