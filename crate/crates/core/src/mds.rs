//! Weighted raw-stress MDS (SMACOF), classical MDS and out-of-sample
//! embedding into a fixed configuration.

use nalgebra::Cholesky;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dissim::DissimilarityMatrix;
use crate::linalg::{self, Matrix};
use crate::seed::{self, tag};
use crate::{Error, Result};

/// `n x m` coordinates; rows are embedded points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfiguration {
    coords: Matrix,
}

impl EmbeddingConfiguration {
    pub fn new(coords: Matrix) -> Result<Self> {
        if coords.ncols() == 0 {
            return Err(Error::DimensionOutOfRange { m: 0, max: usize::MAX });
        }
        if let Some(k) = coords.iter().position(|v| !v.is_finite()) {
            let n = coords.nrows();
            return Err(Error::NonFinite { i: k % n, j: k / n });
        }
        Ok(Self { coords })
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn m(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn into_coords(self) -> Matrix {
        self.coords
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.coords.row(i).iter().copied().collect()
    }

    /// Column-mean centered copy.
    pub fn centered(&self) -> Self {
        Self { coords: linalg::center_columns(&self.coords).0 }
    }

    /// Rows `start..start+len`.
    pub fn rows_range(&self, start: usize, len: usize) -> Self {
        Self { coords: self.coords.rows(start, len).into_owned() }
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        let m = self.m();
        Self { coords: Matrix::from_fn(idx.len(), m, |a, b| self.coords[(idx[a], b)]) }
    }

    /// Stack configurations vertically (they must share `m`).
    pub fn stack(parts: &[EmbeddingConfiguration]) -> Result<Self> {
        let m = parts.first().map_or(1, |p| p.m());
        if parts.iter().any(|p| p.m() != m) {
            return Err(Error::DimensionMismatch("stacked configurations differ in m".into()));
        }
        let n: usize = parts.iter().map(|p| p.n()).sum();
        let mut coords = Matrix::zeros(n, m);
        let mut off = 0;
        for p in parts {
            coords.rows_mut(off, p.n()).copy_from(&p.coords);
            off += p.n();
        }
        Ok(Self { coords })
    }

    pub fn distances(&self) -> Matrix {
        linalg::pairwise_distances(&self.coords)
    }
}

/// Symmetric nonnegative weights; zero marks a missing dissimilarity.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: Matrix,
}

impl WeightMatrix {
    pub fn new(w: Matrix) -> Result<Self> {
        let (r, c) = w.shape();
        if r != c {
            return Err(Error::NonSquare { rows: r, cols: c });
        }
        for i in 0..r {
            for j in 0..r {
                let v = w[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if v < 0.0 {
                    return Err(Error::InvalidParams(format!("negative weight at ({i}, {j})")));
                }
                if (v - w[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidParams(format!("asymmetric weight at ({i}, {j})")));
                }
            }
        }
        Ok(Self { w })
    }

    pub fn unit(n: usize) -> Self {
        let mut w = Matrix::from_element(n, n, 1.0);
        w.fill_diagonal(0.0);
        Self { w }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    /// Connected components of the positive-weight graph (labels by first index).
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.w[(i, j)] > 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        (0..n).map(|i| find(&mut parent, i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct StressValue(pub f64);

/// `sum_{i<j} w_ij (d_ij - delta_ij)^2`.
pub fn raw_stress(
    config: &EmbeddingConfiguration,
    delta: &DissimilarityMatrix,
    w: &WeightMatrix,
) -> Result<StressValue> {
    let n = config.n();
    if delta.n() != n || w.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "config has {n} points, delta {} and weights {}",
            delta.n(),
            w.n()
        )));
    }
    Ok(StressValue(stress_of(config.coords(), delta.entries(), w.matrix())))
}

fn stress_of(x: &Matrix, delta: &Matrix, w: &Matrix) -> f64 {
    let n = x.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let wij = w[(i, j)];
            if wij > 0.0 {
                let r = linalg::row_distance(x, i, x, j) - delta[(i, j)];
                s += wij * r * r;
            }
        }
    }
    s
}

/// Classical (Torgerson) MDS with the eigen-structure kept for
/// out-of-sample projection.
#[derive(Debug, Clone)]
pub struct ClassicalFit {
    pub config: EmbeddingConfiguration,
    /// Retained eigenvalues, clipped at zero.
    pub eigenvalues: Vec<f64>,
    /// All eigenvalues of the double-centered matrix, non-increasing.
    pub scree: Vec<f64>,
    row_mean_sq: Vec<f64>,
    grand_mean_sq: f64,
}

/// Eigenvalues below this fraction of the largest are treated as zero.
const EIGEN_REL_FLOOR: f64 = 1e-10;

pub fn classical_fit(delta: &Matrix, m: usize) -> Result<ClassicalFit> {
    let n = delta.nrows();
    if m < 1 || m + 1 > n {
        return Err(Error::DimensionOutOfRange { m, max: n.saturating_sub(1) });
    }
    let sq = delta.map(|v| v * v);
    let row_mean_sq: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand_mean_sq = row_mean_sq.iter().sum::<f64>() / n as f64;
    let b = Matrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_mean_sq[i] - row_mean_sq[j] + grand_mean_sq)
    });
    let (vals, vecs) = linalg::sym_eigen_desc(&b);
    let top = vals[0].max(0.0);
    let mut coords = Matrix::zeros(n, m);
    let mut kept = Vec::with_capacity(m);
    for k in 0..m {
        let lam = if vals[k] > EIGEN_REL_FLOOR * top { vals[k] } else { 0.0 };
        kept.push(lam);
        if lam > 0.0 {
            let s = lam.sqrt();
            for i in 0..n {
                coords[(i, k)] = vecs[(i, k)] * s;
            }
        }
    }
    Ok(ClassicalFit {
        config: EmbeddingConfiguration { coords },
        eigenvalues: kept,
        scree: vals.iter().copied().collect(),
        row_mean_sq,
        grand_mean_sq,
    })
}

/// Top-`m` classical MDS configuration of `delta`.
pub fn classical_mds(delta: &DissimilarityMatrix, m: usize) -> Result<EmbeddingConfiguration> {
    Ok(classical_fit(delta.entries(), m)?.config)
}

impl ClassicalFit {
    /// Project a new point from its dissimilarities to the training points
    /// (Gower's add-a-point formula). Training rows map to themselves.
    pub fn embed_oos(&self, dissims: &[f64]) -> Result<Vec<f64>> {
        let n = self.config.n();
        if dissims.len() != n {
            return Err(Error::ShapeMismatch(format!("expected {n} dissimilarities, got {}", dissims.len())));
        }
        let a: Vec<f64> = dissims.iter().map(|v| v * v).collect();
        let a_mean = a.iter().sum::<f64>() / n as f64;
        let b: Vec<f64> = (0..n)
            .map(|i| -0.5 * (a[i] - a_mean - self.row_mean_sq[i] + self.grand_mean_sq))
            .collect();
        let x = self.config.coords();
        Ok((0..self.config.m())
            .map(|k| {
                let lam = self.eigenvalues[k];
                if lam > 0.0 {
                    (0..n).map(|i| x[(i, k)] * b[i]).sum::<f64>() / lam
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// Classical MDS initialization for a weighted problem: missing entries
/// (zero weight) are filled with the mean of the observed off-diagonal ones.
pub fn classical_init(delta: &DissimilarityMatrix, w: &WeightMatrix, m: usize) -> Result<EmbeddingConfiguration> {
    let n = delta.n();
    let mut sum = 0.0;
    let mut cnt = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if w.get(i, j) > 0.0 {
                sum += delta.get(i, j);
                cnt += 1;
            }
        }
    }
    let fill = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
    let filled = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if w.get(i, j) > 0.0 {
            delta.get(i, j)
        } else {
            fill
        }
    });
    classical_fit(&filled, m.min(n.saturating_sub(1)).max(1)).map(|f| pad_columns(f.config, m))
}

fn pad_columns(c: EmbeddingConfiguration, m: usize) -> EmbeddingConfiguration {
    if c.m() >= m {
        return c;
    }
    let mut coords = Matrix::zeros(c.n(), m);
    coords.columns_mut(0, c.m()).copy_from(&c.coords);
    EmbeddingConfiguration { coords }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmacofParams {
    /// Relative stress decrease below which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Random restarts in addition to the primary initialization.
    pub restarts: usize,
    /// Permit a disconnected weight graph; components are then fitted
    /// independently, each centered at the origin.
    pub allow_disconnected: bool,
}

impl Default for SmacofParams {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 1000, restarts: 0, allow_disconnected: false }
    }
}

#[derive(Debug, Clone)]
pub enum SmacofInit {
    /// Classical MDS of the (mean-filled) matrix.
    Classical,
    Given(EmbeddingConfiguration),
}

#[derive(Debug, Clone)]
pub struct SmacofResult {
    pub config: EmbeddingConfiguration,
    pub stress: StressValue,
    pub iterations: usize,
    /// Stress before the first iteration and after each one.
    pub trace: Vec<f64>,
    /// 0 for the primary start, `r` for the r-th random restart.
    pub restart: usize,
}

/// Precomputed Moore-Penrose inverse of the weighted Laplacian.
struct Guttman {
    vplus: Matrix,
}

impl Guttman {
    fn new(w: &WeightMatrix, allow_disconnected: bool) -> Result<Self> {
        let n = w.n();
        let comp = w.components();
        let mut sizes = vec![0usize; n];
        for &c in &comp {
            sizes[c] += 1;
        }
        let n_comp = sizes.iter().filter(|&&s| s > 0).count();
        if n_comp > 1 && !allow_disconnected {
            return Err(Error::DisconnectedWeights { n });
        }
        let mut v = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let wij = w.get(i, j);
                    v[(i, j)] = -wij;
                    v[(i, i)] += wij;
                }
            }
        }
        let j = Matrix::from_fn(n, n, |a, b| {
            if comp[a] == comp[b] {
                1.0 / sizes[comp[a]] as f64
            } else {
                0.0
            }
        });
        let shifted = &v + &j;
        let inv = match Cholesky::new(shifted.clone()) {
            Some(ch) => ch.inverse(),
            None => shifted
                .try_inverse()
                .ok_or_else(|| Error::NumericFailure("weighted Laplacian not invertible".into()))?,
        };
        Ok(Self { vplus: inv - j })
    }

    /// Stress at `x` and the Guttman transform of `x`, from one pass over
    /// the pairs.
    fn eval(&self, x: &Matrix, delta: &Matrix, w: &WeightMatrix) -> (f64, Matrix) {
        let (n, m) = x.shape();
        let rows = row_major(x);
        let wm = w.matrix();
        let mut bx = vec![0.0; n * m];
        let mut stress = 0.0;
        for i in 0..n {
            let xi = &rows[i * m..(i + 1) * m];
            for j in (i + 1)..n {
                let wij = wm[(i, j)];
                if wij <= 0.0 {
                    continue;
                }
                let xj = &rows[j * m..(j + 1) * m];
                let d = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let r = d - delta[(i, j)];
                stress += wij * r * r;
                if d <= 0.0 {
                    continue;
                }
                let c = wij * delta[(i, j)] / d;
                for k in 0..m {
                    let t = c * (xi[k] - xj[k]);
                    bx[i * m + k] += t;
                    bx[j * m + k] -= t;
                }
            }
        }
        (stress, &self.vplus * Matrix::from_row_slice(n, m, &bx))
    }
}

fn check_problem(delta: &DissimilarityMatrix, w: &WeightMatrix, m: usize, p: &SmacofParams) -> Result<()> {
    if delta.n() != w.n() {
        return Err(Error::DimensionMismatch(format!("delta {} vs weights {}", delta.n(), w.n())));
    }
    if m < 1 {
        return Err(Error::DimensionOutOfRange { m, max: delta.n() });
    }
    if !(p.tol > 0.0) || p.max_iter < 1 {
        return Err(Error::InvalidParams("smacof needs tol > 0 and max_iter >= 1".into()));
    }
    Ok(())
}

fn random_config(n: usize, m: usize, scale: f64, seed: u64) -> Matrix {
    let mut rng = seed::rng(seed);
    Matrix::from_fn(n, m, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn weighted_mean_delta(delta: &DissimilarityMatrix, w: &WeightMatrix) -> f64 {
    let n = delta.n();
    let (mut s, mut t) = (0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            s += w.get(i, j) * delta.get(i, j);
            t += w.get(i, j);
        }
    }
    if t > 0.0 {
        s / t
    } else {
        1.0
    }
}

/// Run SMACOF from one starting configuration.
pub fn smacof_run(
    delta: &DissimilarityMatrix,
    w: &WeightMatrix,
    init: &EmbeddingConfiguration,
    params: &SmacofParams,
) -> Result<SmacofResult> {
    check_problem(delta, w, init.m(), params)?;
    if init.n() != delta.n() {
        return Err(Error::DimensionMismatch(format!("init has {} rows, delta {}", init.n(), delta.n())));
    }
    let g = Guttman::new(w, params.allow_disconnected)?;
    Ok(iterate(&g, delta, w, init.coords().clone(), params, 0))
}

fn iterate(
    g: &Guttman,
    delta: &DissimilarityMatrix,
    w: &WeightMatrix,
    mut x: Matrix,
    params: &SmacofParams,
    restart: usize,
) -> SmacofResult {
    let d = delta.entries();
    let (mut prev, mut next) = g.eval(&x, d, w);
    let mut trace = vec![prev];
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        let (cur, after) = g.eval(&next, d, w);
        x = next;
        next = after;
        iterations += 1;
        trace.push(cur);
        let rel = (prev - cur) / prev.max(f64::EPSILON);
        prev = cur;
        if rel < params.tol {
            break;
        }
    }
    SmacofResult {
        config: EmbeddingConfiguration { coords: x },
        stress: StressValue(prev),
        iterations,
        trace,
        restart,
    }
}

/// Weighted raw-stress MDS by majorization with optional random restarts.
/// The lowest final stress wins; ties go to the earliest start.
pub fn smacof_embed(
    delta: &DissimilarityMatrix,
    w: &WeightMatrix,
    m: usize,
    init: SmacofInit,
    params: &SmacofParams,
    seed: u64,
) -> Result<SmacofResult> {
    check_problem(delta, w, m, params)?;
    let n = delta.n();
    let g = Guttman::new(w, params.allow_disconnected)?;
    let start = match init {
        SmacofInit::Classical => classical_init(delta, w, m)?,
        SmacofInit::Given(c) => {
            if c.n() != n || c.m() != m {
                return Err(Error::DimensionMismatch(format!(
                    "init is {}x{}, expected {n}x{m}",
                    c.n(),
                    c.m()
                )));
            }
            c
        }
    };
    let mut best = iterate(&g, delta, w, start.coords, params, 0);
    let scale = weighted_mean_delta(delta, w) / (2.0f64 * m as f64).sqrt();
    for r in 1..=params.restarts {
        let x0 = random_config(n, m, scale, seed::derive_path(seed, &[tag::RESTART, r as u64]));
        let res = iterate(&g, delta, w, x0, params, r);
        if res.stress.0 < best.stress.0 {
            best = res;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OosParams {
    /// Random-perturbation starts in addition to the barycenter start.
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OosParams {
    fn default() -> Self {
        Self { restarts: 5, tol: 1e-8, max_iter: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct OosResult {
    pub point: Vec<f64>,
    pub objective: f64,
    /// Index of the winning start (0 = barycenter).
    pub start: usize,
    pub initial_objectives: Vec<f64>,
}

/// `sum_i w_i (|y - x_i| - u_i)^2`.
pub fn oos_objective(config: &Matrix, y: &[f64], u: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..config.nrows() {
        if w[i] > 0.0 {
            let d = dist_to_row(config, i, y);
            s += w[i] * (d - u[i]) * (d - u[i]);
        }
    }
    s
}

fn dist_to_row(x: &Matrix, i: usize, y: &[f64]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(k, v)| (v - x[(i, k)]) * (v - x[(i, k)]))
        .sum::<f64>()
        .sqrt()
}

/// Objective at `y` and the majorization step from `y`, sharing one pass
/// over the anchors. `rows` holds the anchors row-major.
fn oos_eval(rows: &[f64], y: &[f64], u: &[f64], w: &[f64], wsum: f64) -> (f64, Vec<f64>) {
    let m = y.len();
    let mut f = 0.0;
    let mut acc = vec![0.0; m];
    for (i, xi) in rows.chunks_exact(m).enumerate() {
        if w[i] <= 0.0 {
            continue;
        }
        let d = y.iter().zip(xi).map(|(v, x)| (v - x) * (v - x)).sum::<f64>().sqrt();
        f += w[i] * (d - u[i]) * (d - u[i]);
        let ratio = if d > 0.0 { u[i] / d } else { 0.0 };
        for k in 0..m {
            acc[k] += w[i] * (xi[k] + ratio * (y[k] - xi[k]));
        }
    }
    acc.iter_mut().for_each(|v| *v /= wsum);
    (f, acc)
}

fn row_major(x: &Matrix) -> Vec<f64> {
    x.transpose().as_slice().to_vec()
}

fn oos_iterate(rows: &[f64], mut y: Vec<f64>, u: &[f64], w: &[f64], wsum: f64, p: &OosParams) -> (Vec<f64>, f64) {
    let (mut prev, mut next) = oos_eval(rows, &y, u, w, wsum);
    for _ in 0..p.max_iter {
        let (cur, after) = oos_eval(rows, &next, u, w, wsum);
        if cur > prev {
            break;
        }
        y = next;
        next = after;
        let rel = (prev - cur) / prev.max(f64::EPSILON);
        prev = cur;
        if rel < p.tol {
            break;
        }
    }
    (y, prev)
}

/// Weighted barycenter of the `m + 1` positively weighted anchors with the
/// smallest dissimilarity.
fn barycenter_start(x: &Matrix, u: &[f64], w: &[f64]) -> Vec<f64> {
    let m = x.ncols();
    let mut idx: Vec<usize> = (0..x.nrows()).filter(|&i| w[i] > 0.0).collect();
    idx.sort_by(|&a, &b| u[a].partial_cmp(&u[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx.truncate(m + 1);
    let total: f64 = idx.iter().map(|&i| w[i]).sum();
    (0..m).map(|k| idx.iter().map(|&i| w[i] * x[(i, k)]).sum::<f64>() / total).collect()
}

fn spread(x: &Matrix) -> f64 {
    let (c, _) = linalg::center_columns(x);
    (c.norm_squared() / x.nrows().max(1) as f64).sqrt()
}

fn check_oos(config: &EmbeddingConfiguration, u: &[f64], w: &[f64]) -> Result<f64> {
    let n = config.n();
    if u.len() != n || w.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "configuration has {n} anchors, got {} dissimilarities and {} weights",
            u.len(),
            w.len()
        )));
    }
    if w.iter().any(|v| *v < 0.0 || !v.is_finite()) || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("out-of-sample inputs must be finite, weights nonnegative".into()));
    }
    let wsum: f64 = w.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::AllWeightsZero);
    }
    Ok(wsum)
}

/// Embed one new point into a fixed configuration by minimizing its
/// weighted raw stress against the anchors.
pub fn oos_embed(
    config: &EmbeddingConfiguration,
    dissims: &[f64],
    weights: &[f64],
    params: &OosParams,
    seed: u64,
) -> Result<OosResult> {
    let wsum = check_oos(config, dissims, weights)?;
    let x = config.coords();
    let m = config.m();
    let base = barycenter_start(x, dissims, weights);
    let sd = match spread(x) {
        s if s > 0.0 => s,
        _ => dissims.iter().cloned().fold(0.0, f64::max).max(1.0),
    };
    let mut starts = vec![base.clone()];
    let mut rng = seed::rng(seed);
    for _ in 0..params.restarts {
        starts.push((0..m).map(|k| base[k] + sd * rng.sample::<f64, _>(StandardNormal)).collect());
    }
    let initial_objectives: Vec<f64> = starts.iter().map(|y| oos_objective(x, y, dissims, weights)).collect();
    let rows = row_major(x);
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (s, y0) in starts.into_iter().enumerate() {
        let (y, f) = oos_iterate(&rows, y0, dissims, weights, wsum, params);
        if best.as_ref().is_none_or(|b| f < b.2) {
            best = Some((s, y, f));
        }
    }
    let (start, point, objective) = best.expect("at least one start");
    Ok(OosResult { point, objective, start, initial_objectives })
}

/// Embed two new points jointly: each sees the configuration plus the
/// other point, with mutual dissimilarity `mutual.0` at weight `mutual.1`.
/// Block-coordinate majorization from the separate solutions.
pub fn oos_embed_pair(
    config: &EmbeddingConfiguration,
    dissims: [&[f64]; 2],
    weights: [&[f64]; 2],
    mutual: (f64, f64),
    params: &OosParams,
    seed: u64,
) -> Result<([Vec<f64>; 2], f64)> {
    let a = oos_embed(config, dissims[0], weights[0], params, seed::derive(seed, 0))?;
    let b = oos_embed(config, dissims[1], weights[1], params, seed::derive(seed, 1))?;
    let n = config.n();
    let m = config.m();
    let mut pts = [a.point, b.point];
    let mut ext = Matrix::zeros(n + 1, m);
    ext.rows_mut(0, n).copy_from(config.coords());
    let ext_inputs = |k: usize| -> (Vec<f64>, Vec<f64>) {
        let mut u = dissims[k].to_vec();
        u.push(mutual.0);
        let mut w = weights[k].to_vec();
        w.push(mutual.1);
        (u, w)
    };
    let inputs = [ext_inputs(0), ext_inputs(1)];
    let joint = |pts: &[Vec<f64>; 2]| -> f64 {
        let d = linalg::euclidean(&pts[0], &pts[1]);
        oos_objective(config.coords(), &pts[0], dissims[0], weights[0])
            + oos_objective(config.coords(), &pts[1], dissims[1], weights[1])
            + mutual.1 * (d - mutual.0) * (d - mutual.0)
    };
    let mut prev = joint(&pts);
    for _ in 0..params.max_iter {
        for k in 0..2 {
            let other = pts[1 - k].clone();
            for (c, v) in other.iter().enumerate() {
                ext[(n, c)] = *v;
            }
            let (u, w) = &inputs[k];
            let wsum: f64 = w.iter().sum();
            pts[k] = oos_eval(&row_major(&ext), &pts[k], u, w, wsum).1;
        }
        let cur = joint(&pts);
        let rel = (prev - cur) / prev.max(f64::EPSILON);
        prev = cur;
        if rel < params.tol {
            break;
        }
    }
    Ok((pts, prev))
}
