//! Dissimilarity matrices: validation, cosine dissimilarity, pre-scaling.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Absolute tolerance for asymmetry and diagonal noise accepted by [`validate`].
pub const VALIDATION_TOL: f64 = 1e-9;

/// An `n x n` hollow, symmetric, nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    entries: Matrix,
}

impl DissimilarityMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    /// Submatrix on the given index set, in order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let m = Matrix::from_fn(k, k, |a, b| self.entries[(idx[a], idx[b])]);
        Self { entries: m }
    }

    /// Off-diagonal entries of the upper triangle.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| self.entries[(i, j)]))
    }

    /// Multiply every entry by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { entries: &self.entries * factor }
    }
}

/// Check a square matrix and return it as a dissimilarity matrix.
///
/// Asymmetry up to [`VALIDATION_TOL`] is removed by averaging with the
/// transpose, diagonal noise up to the same tolerance is set to zero.
pub fn validate(entries: Matrix) -> Result<DissimilarityMatrix> {
    let (rows, cols) = entries.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let n = rows;
    for i in 0..n {
        for j in 0..n {
            let v = entries[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j });
            }
        }
    }
    for i in 0..n {
        let d = entries[(i, i)];
        if d.abs() > VALIDATION_TOL {
            return Err(Error::NonzeroDiagonal { i, value: d });
        }
        for j in (i + 1)..n {
            let diff = (entries[(i, j)] - entries[(j, i)]).abs();
            if diff > VALIDATION_TOL {
                return Err(Error::AsymmetryExceedsTolerance { i, j, diff });
            }
        }
    }
    let mut out = (&entries + entries.transpose()) * 0.5;
    for i in 0..n {
        out[(i, i)] = 0.0;
        for j in 0..n {
            if out[(i, j)] < 0.0 {
                return Err(Error::NegativeEntry { i, j, value: out[(i, j)] });
            }
        }
    }
    Ok(DissimilarityMatrix { entries: out })
}

/// Convenience: validate from nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<DissimilarityMatrix> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::NonSquare { rows: n, cols: r.len() });
    }
    validate(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Raw per-object feature vectors; all rows share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVectors {
    rows: Vec<Vec<f64>>,
}

impl FeatureVectors {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let dim = first.len();
            if dim == 0 {
                return Err(Error::RaggedRows { row: 0 });
            }
            for (i, r) in rows.iter().enumerate() {
                if r.len() != dim {
                    return Err(Error::RaggedRows { row: i });
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// `1 - <x_i, x_j> / (|x_i| |x_j|)` for all pairs.
pub fn cosine_dissimilarity(vectors: &FeatureVectors) -> Result<DissimilarityMatrix> {
    let rows = vectors.rows();
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if let Some(row) = norms.iter().position(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::ZeroNormRow { row });
    }
    let n = rows.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            // rounding can push the cosine slightly past 1
            let v = (1.0 - dot / (norms[i] * norms[j])).max(0.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(DissimilarityMatrix { entries: m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMethod {
    None,
    #[default]
    MeanOne,
    FrobeniusOne,
    MedianOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub method: ScalingMethod,
    /// Each input matrix was divided by its factor.
    pub factor_per_condition: Vec<f64>,
}

fn scale_statistic(delta: &DissimilarityMatrix, method: ScalingMethod) -> f64 {
    let mut off: Vec<f64> = delta.off_diagonal().collect();
    match method {
        ScalingMethod::None => 1.0,
        ScalingMethod::MeanOne => off.iter().sum::<f64>() / off.len().max(1) as f64,
        ScalingMethod::FrobeniusOne => delta.entries().norm(),
        ScalingMethod::MedianOne => {
            off.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = off.len();
            if k == 0 {
                0.0
            } else if k % 2 == 1 {
                off[k / 2]
            } else {
                0.5 * (off[k / 2 - 1] + off[k / 2])
            }
        }
    }
}

/// Divide each matrix by its own statistic so that statistic becomes 1.
pub fn prescale(
    deltas: &[DissimilarityMatrix],
    method: ScalingMethod,
) -> Result<(Vec<DissimilarityMatrix>, ScalingReport)> {
    let mut out = Vec::with_capacity(deltas.len());
    let mut factors = Vec::with_capacity(deltas.len());
    for (index, d) in deltas.iter().enumerate() {
        if method == ScalingMethod::None {
            out.push(d.clone());
            factors.push(1.0);
            continue;
        }
        if !d.off_diagonal().any(|v| v > 0.0) {
            return Err(Error::AllZeroMatrix { index });
        }
        let f = scale_statistic(d, method);
        if !(f > 0.0) {
            // median of a mostly-zero matrix
            return Err(Error::AllZeroMatrix { index });
        }
        out.push(d.scaled(1.0 / f));
        factors.push(f);
    }
    Ok((out, ScalingReport { method, factor_per_condition: factors }))
}
