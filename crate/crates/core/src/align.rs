//! Orthogonal Procrustes alignment and canonical correlation analysis.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix, Vector};
use crate::mds::EmbeddingConfiguration;
use crate::{Error, Result};

/// An `m x m` orthogonal matrix acting on row vectors from the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalTransform {
    m: usize,
    /// Row-major entries.
    q: Vec<f64>,
}

impl OrthogonalTransform {
    pub fn identity(m: usize) -> Self {
        Self::from_matrix(&Matrix::identity(m, m))
    }

    pub fn from_matrix(q: &Matrix) -> Self {
        let m = q.nrows();
        Self { m, q: (0..m).flat_map(|i| (0..m).map(move |j| q[(i, j)])).collect() }
    }

    pub fn matrix(&self) -> Matrix {
        Matrix::from_row_slice(self.m, self.m, &self.q)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `|Q^T Q - I|_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let q = self.matrix();
        (q.transpose() * &q - Matrix::identity(self.m, self.m)).norm()
    }
}

/// `argmin_{Q^T Q = I} |X1 - X2 Q|_F`, optionally centering both inputs first.
pub fn procrustes(x1: &EmbeddingConfiguration, x2: &EmbeddingConfiguration, center: bool) -> Result<OrthogonalTransform> {
    if x1.n() != x2.n() || x1.m() != x2.m() {
        return Err(Error::ShapeMismatch(format!(
            "procrustes on {}x{} and {}x{}",
            x1.n(),
            x1.m(),
            x2.n(),
            x2.m()
        )));
    }
    let (a, b) = if center {
        (linalg::center_columns(x1.coords()).0, linalg::center_columns(x2.coords()).0)
    } else {
        (x1.coords().clone(), x2.coords().clone())
    };
    let cross = b.transpose() * a;
    let svd = cross.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    Ok(OrthogonalTransform::from_matrix(&(u * vt)))
}

/// Right-multiply each row of `points` by `Q`.
pub fn apply_transform(q: &OrthogonalTransform, points: &Matrix) -> Result<Matrix> {
    if points.ncols() != q.m() {
        return Err(Error::ShapeMismatch(format!("points have {} columns, transform is {}", points.ncols(), q.m())));
    }
    Ok(points * q.matrix())
}

pub fn apply_transform_point(q: &OrthogonalTransform, y: &[f64]) -> Result<Vec<f64>> {
    let row = Matrix::from_row_slice(1, y.len(), y);
    Ok(apply_transform(q, &row)?.iter().copied().collect())
}

/// Fitted canonical correlation maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaMaps {
    /// `m1 x m` map, row-major.
    u1: Vec<f64>,
    /// `m2 x m` map, row-major.
    u2: Vec<f64>,
    m1: usize,
    m2: usize,
    m: usize,
    pub correlations: Vec<f64>,
    pub offset1: Vec<f64>,
    pub offset2: Vec<f64>,
    pub ridge1: f64,
    pub ridge2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    First,
    Second,
}

impl CcaMaps {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn map(&self, side: Side) -> Matrix {
        match side {
            Side::First => Matrix::from_row_slice(self.m1, self.m, &self.u1),
            Side::Second => Matrix::from_row_slice(self.m2, self.m, &self.u2),
        }
    }

    fn offset(&self, side: Side) -> &[f64] {
        match side {
            Side::First => &self.offset1,
            Side::Second => &self.offset2,
        }
    }
}

/// Default ridge: `1e-8 * trace(Cov) / dim`.
pub fn default_ridge(cov: &Matrix) -> f64 {
    1e-8 * cov.trace() / cov.nrows().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Ridge {
    /// Scale-aware default per side.
    Auto,
    Fixed(f64),
}

fn covariance(xc: &Matrix, yc: &Matrix) -> Matrix {
    xc.transpose() * yc / (xc.nrows() as f64 - 1.0)
}

/// Canonical correlation analysis via whitening and an SVD of the whitened
/// cross-covariance. Directions are sign-flipped so the first side's column
/// has a positive largest-magnitude entry; correlations are nonnegative.
pub fn cca_fit(x1: &Matrix, x2: &Matrix, m: usize, ridge: Ridge) -> Result<CcaMaps> {
    let n = x1.nrows();
    if x2.nrows() != n {
        return Err(Error::ShapeMismatch(format!("cca on {n} and {} rows", x2.nrows())));
    }
    if n < 2 {
        return Err(Error::InsufficientData("cca needs at least 2 rows".into()));
    }
    let (m1, m2) = (x1.ncols(), x2.ncols());
    if m < 1 || m > m1.min(m2) {
        return Err(Error::DimensionOutOfRange { m, max: m1.min(m2) });
    }
    let (c1, off1) = linalg::center_columns(x1);
    let (c2, off2) = linalg::center_columns(x2);
    let s11 = covariance(&c1, &c1);
    let s22 = covariance(&c2, &c2);
    let s12 = covariance(&c1, &c2);
    let (r1, r2) = match ridge {
        Ridge::Auto => (default_ridge(&s11), default_ridge(&s22)),
        Ridge::Fixed(r) if r >= 0.0 => (r, r),
        Ridge::Fixed(r) => return Err(Error::InvalidParams(format!("negative ridge {r}"))),
    };
    let w1 = whitener(&s11, r1, 1)?;
    let w2 = whitener(&s22, r2, 2)?;
    let t = &w1 * s12 * &w2;
    let svd = t.svd(true, true);
    let a = svd.u.expect("u requested");
    let b = svd.v_t.expect("v requested").transpose();
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let mut u1 = Matrix::zeros(m1, m);
    let mut u2 = Matrix::zeros(m2, m);
    let mut correlations = Vec::with_capacity(m);
    for (dst, &src) in order.iter().take(m).enumerate() {
        let mut d1: Vector = &w1 * a.column(src);
        let mut d2: Vector = &w2 * b.column(src);
        let before = d1.clone();
        linalg::canonical_sign(&mut d1);
        if d1 != before {
            d2.neg_mut();
        }
        u1.set_column(dst, &d1);
        u2.set_column(dst, &d2);
        correlations.push(s[src].clamp(0.0, 1.0));
    }
    let row_major = |x: &Matrix| (0..x.nrows()).flat_map(|i| (0..x.ncols()).map(move |j| x[(i, j)])).collect();
    Ok(CcaMaps {
        u1: row_major(&u1),
        u2: row_major(&u2),
        m1,
        m2,
        m,
        correlations,
        offset1: off1.iter().copied().collect(),
        offset2: off2.iter().copied().collect(),
        ridge1: r1,
        ridge2: r2,
    })
}

fn whitener(cov: &Matrix, ridge: f64, side: usize) -> Result<Matrix> {
    let dim = cov.nrows();
    let reg = cov + Matrix::identity(dim, dim) * ridge;
    if ridge == 0.0 {
        let (vals, _) = linalg::sym_eigen_desc(cov);
        let top = vals[0].abs().max(f64::MIN_POSITIVE);
        if vals[dim - 1] <= 1e-12 * top {
            return Err(Error::DegenerateCovariance { side });
        }
    }
    linalg::inv_sqrt_spd(&reg).ok_or(Error::DegenerateCovariance { side })
}

/// Subtract the stored centering offset, then apply the side's map.
pub fn cca_project(maps: &CcaMaps, side: Side, points: &Matrix) -> Result<Matrix> {
    let u = maps.map(side);
    if points.ncols() != u.nrows() {
        return Err(Error::ShapeMismatch(format!("points have {} columns, map expects {}", points.ncols(), u.nrows())));
    }
    let off = maps.offset(side);
    let mut c = points.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-off[j]);
    }
    Ok(c * u)
}

pub fn cca_project_point(maps: &CcaMaps, side: Side, y: &[f64]) -> Result<Vec<f64>> {
    let row = Matrix::from_row_slice(1, y.len(), y);
    Ok(cca_project(maps, side, &row)?.iter().copied().collect())
}

/// Pearson correlation of two equally long samples.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, m: usize, seed: u64) -> Matrix {
        let mut rng = crate::seed::rng(seed);
        Matrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn random_orthogonal(m: usize, seed: u64) -> Matrix {
        gaussian(m, m, seed).qr().q()
    }

    fn conf(x: Matrix) -> EmbeddingConfiguration {
        EmbeddingConfiguration::new(x).unwrap()
    }

    #[test]
    fn procrustes_identity() {
        let x = conf(gaussian(10, 3, 1));
        let q = procrustes(&x, &x, true).unwrap();
        assert!((q.matrix() - Matrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn procrustes_recovers_rotation() {
        let x1 = gaussian(15, 3, 2);
        let r = random_orthogonal(3, 3);
        let x2 = &x1 * &r;
        let q = procrustes(&conf(x1.clone()), &conf(x2.clone()), false).unwrap();
        assert!((&x1 - x2 * q.matrix()).norm() < 1e-8);
        assert!((q.matrix() - r.transpose()).norm() < 1e-8);
        assert!(q.orthogonality_defect() < 1e-10);
    }

    #[test]
    fn procrustes_beats_random_rotations() {
        let x1 = gaussian(12, 2, 4);
        let x2 = gaussian(12, 2, 5);
        let q = procrustes(&conf(x1.clone()), &conf(x2.clone()), false).unwrap();
        let best = (&x1 - &x2 * q.matrix()).norm();
        for s in 0..100 {
            let r = random_orthogonal(2, 100 + s);
            assert!(best <= (&x1 - &x2 * r).norm() + 1e-12);
        }
    }

    #[test]
    fn procrustes_shape_mismatch() {
        let e = procrustes(&conf(gaussian(5, 2, 0)), &conf(gaussian(6, 2, 0)), true).unwrap_err();
        assert!(matches!(e, Error::ShapeMismatch(_)));
    }

    #[test]
    fn transform_examples() {
        let id = OrthogonalTransform::identity(2);
        let p = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(apply_transform(&id, &p).unwrap(), p);
        let theta = std::f64::consts::FRAC_PI_2;
        let rot = Matrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()]);
        let q = OrthogonalTransform::from_matrix(&rot);
        let y = apply_transform_point(&q, &[1.0, 0.0]).unwrap();
        // row vector (1,0) times [[c, s], [-s, c]] -> (c, s) = (0, 1)
        assert!((y[0]).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
        assert_eq!(apply_transform_point(&q, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(apply_transform_point(&q, &[1.0]).is_err());
    }

    #[test]
    fn cca_linear_relation_is_perfect() {
        let x1 = gaussian(40, 3, 6);
        let a = gaussian(3, 3, 7) + Matrix::identity(3, 3) * 3.0;
        let x2 = &x1 * a;
        let maps = cca_fit(&x1, &x2, 3, Ridge::Fixed(1e-8)).unwrap();
        assert!(maps.correlations.iter().all(|&c| c >= 1.0 - 1e-6), "{:?}", maps.correlations);
    }

    #[test]
    fn cca_one_dimensional_matches_pearson() {
        let x1 = gaussian(30, 1, 8);
        let noise = gaussian(30, 1, 9);
        let x2 = &x1 * 0.7 + noise;
        let maps = cca_fit(&x1, &x2, 1, Ridge::Fixed(0.0)).unwrap();
        let r = pearson(x1.as_slice(), x2.as_slice()).abs();
        assert!((maps.correlations[0] - r).abs() < 1e-10);
    }

    #[test]
    fn cca_projection_reproduces_correlation() {
        let x1 = gaussian(50, 3, 10);
        let x2 = &x1.columns(0, 2) * 0.5 + gaussian(50, 2, 11);
        let maps = cca_fit(&x1, &x2, 1, Ridge::Auto).unwrap();
        let p1 = cca_project(&maps, Side::First, &x1).unwrap();
        let p2 = cca_project(&maps, Side::Second, &x2).unwrap();
        assert!((pearson(p1.as_slice(), p2.as_slice()) - maps.correlations[0]).abs() < 1e-8);
    }

    #[test]
    fn cca_errors_and_ordering() {
        let x1 = gaussian(20, 3, 12);
        let x2 = gaussian(20, 2, 13);
        assert!(matches!(cca_fit(&x1, &x2, 3, Ridge::Auto), Err(Error::DimensionOutOfRange { .. })));
        let mut sing = x1.clone();
        sing.set_column(2, &sing.column(0).clone_owned());
        assert!(matches!(cca_fit(&sing, &x2, 1, Ridge::Fixed(0.0)), Err(Error::DegenerateCovariance { side: 1 })));
        let maps = cca_fit(&x1, &x2, 2, Ridge::Auto).unwrap();
        assert!(maps.correlations.windows(2).all(|w| w[0] >= w[1]));
        assert!(maps.correlations.iter().all(|c| (0.0..=1.0).contains(c)));
        let zero_ridge = cca_fit(&gaussian(20, 2, 14).qr().q(), &x2, 2, Ridge::Fixed(0.0)).unwrap();
        let proj = cca_project(&zero_ridge, Side::First, &gaussian(3, 2, 15)).unwrap();
        assert!(proj.iter().all(|v| v.is_finite()));
    }
}
