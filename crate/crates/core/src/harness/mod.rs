//! Monte Carlo experiments on top of the matchers.

pub mod dimension;
pub mod grassmann;
pub mod holdout;
pub mod power;
pub mod rank;
pub mod stats;

pub use dimension::zhu_ghodsi_dimension;
pub use grassmann::{diagnose, grassmann_hausdorff, DiagnoseConfig, GrassmannDiagnostic, GrassmannRecord};
pub use holdout::{holdout_experiment, HoldoutPairing, HoldoutResult};
pub use power::{null_distribution, power_curves, NullMode, PowerConfig, PowerCurve, PowerStudy};
pub use rank::{rank_experiment, rank_of, RankConfig, RankResult};
pub use stats::critical_value;

use crate::dissim::{prescale, DissimilarityMatrix, ScalingMethod};
use crate::Result;

/// Training matrices after scaling, with the factors needed to put new
/// dissimilarity vectors on the same scale.
#[derive(Debug, Clone)]
pub(crate) struct ScaledPair {
    pub d1: DissimilarityMatrix,
    pub d2: DissimilarityMatrix,
    pub factors: [f64; 2],
}

impl ScaledPair {
    pub fn new(d1: &DissimilarityMatrix, d2: &DissimilarityMatrix, method: ScalingMethod) -> Result<Self> {
        let (mut out, report) = prescale(&[d1.clone(), d2.clone()], method)?;
        let f = &report.factor_per_condition;
        let d2 = out.pop().expect("two matrices");
        let d1 = out.pop().expect("two matrices");
        Ok(Self { d1, d2, factors: [f[0], f[1]] })
    }

    pub fn scale(&self, side: usize, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| x / self.factors[side]).collect()
    }
}

/// Drop index `skip` entries from a row, keeping `keep` order.
pub(crate) fn restrict(row: &[f64], keep: &[usize]) -> Vec<f64> {
    keep.iter().map(|&j| row[j]).collect()
}
