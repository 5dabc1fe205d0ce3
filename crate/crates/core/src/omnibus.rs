//! Omnibus dissimilarity matrix, imputation of the cross-condition block,
//! the fidelity / commensurability / separability decomposition, and the
//! joint (JOFC) embedding with its out-of-sample rule.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dissim::{self, DissimilarityMatrix};
use crate::linalg::{self, Matrix};
use crate::mds::{self, EmbeddingConfiguration, OosParams, SmacofInit, SmacofParams, WeightMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalImputation {
    #[default]
    Zero,
    /// Per-object imputed matched dissimilarity.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "lambda")]
pub enum OffDiagonalImputation {
    /// Cross-object, cross-condition entries carry zero weight.
    #[default]
    Missing,
    /// `(D_a + D_b) / 2`.
    Mean,
    /// `lambda D_a + (1 - lambda) D_b`.
    LambdaBlend(f64),
    /// `(lambda D_a^2 + (1 - lambda) D_b^2)^(1/2)`.
    PowerMean(f64),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputationPolicy {
    pub diagonal: DiagonalImputation,
    pub off_diagonal: OffDiagonalImputation,
}

impl ImputationPolicy {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let DiagonalImputation::Custom(v) = &self.diagonal {
            if v.len() != n {
                return Err(Error::InvalidPolicy(format!("custom diagonal has {} values, need {n}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidPolicy("custom diagonal must be finite and nonnegative".into()));
            }
        }
        match self.off_diagonal {
            OffDiagonalImputation::LambdaBlend(l) | OffDiagonalImputation::PowerMean(l) if !(0.0..=1.0).contains(&l) => {
                Err(Error::InvalidPolicy(format!("lambda {l} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    fn matched(&self, i: usize) -> f64 {
        match &self.diagonal {
            DiagonalImputation::Zero => 0.0,
            DiagonalImputation::Custom(v) => v[i],
        }
    }

    /// Imputed cross dissimilarity between object `i` of condition `a` and
    /// object `j` of condition `b`, or `None` when missing.
    fn cross(&self, da: &DissimilarityMatrix, db: &DissimilarityMatrix, i: usize, j: usize) -> Option<f64> {
        let (x, y) = (da.get(i, j), db.get(i, j));
        match self.off_diagonal {
            OffDiagonalImputation::Missing => None,
            OffDiagonalImputation::Mean => Some(0.5 * (x + y)),
            OffDiagonalImputation::LambdaBlend(l) => Some(l * x + (1.0 - l) * y),
            OffDiagonalImputation::PowerMean(l) => Some((l * x * x + (1.0 - l) * y * y).sqrt()),
        }
    }
}

/// Fidelity/commensurability tradeoff `omega` in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TradeoffWeights(f64);

impl TradeoffWeights {
    pub fn new(omega: f64) -> Result<Self> {
        if omega > 0.0 && omega < 1.0 {
            Ok(Self(omega))
        } else {
            Err(Error::InvalidParams(format!("omega {omega} outside (0, 1)")))
        }
    }

    pub fn omega(&self) -> f64 {
        self.0
    }
}

impl Default for TradeoffWeights {
    fn default() -> Self {
        Self(0.5)
    }
}

impl TryFrom<f64> for TradeoffWeights {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TradeoffWeights> for f64 {
    fn from(t: TradeoffWeights) -> f64 {
        t.0
    }
}

/// How omnibus entries are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// Weights chosen so the stress equals `omega * mean fidelity +
    /// (1 - omega) * (commensurability + separability)` as mean errors.
    #[default]
    Normalized,
    /// Unnormalized sums: `omega` per within pair, `1 - omega` per cross pair.
    RawSum,
}

/// Per-entry weights of the three kinds of omnibus pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockWeights {
    pub within: f64,
    pub matched: f64,
    pub cross: f64,
}

impl BlockWeights {
    pub fn new(scheme: WeightScheme, tradeoff: TradeoffWeights, k: usize, n: usize) -> Self {
        let w = tradeoff.omega();
        match scheme {
            WeightScheme::RawSum => Self { within: w, matched: 1.0 - w, cross: 1.0 - w },
            WeightScheme::Normalized => {
                let pairs = (n * (n - 1) / 2).max(1) as f64;
                let kf = k as f64;
                let ordered = (n * (n - 1)).max(1) as f64;
                Self {
                    within: w / (kf * pairs),
                    matched: (1.0 - w) / (n as f64 * (kf - 1.0)),
                    cross: (1.0 - w) / (ordered * (kf - 1.0)),
                }
            }
        }
    }
}

/// `Kn x Kn` block dissimilarity matrix with its weights.
#[derive(Debug, Clone)]
pub struct OmnibusMatrix {
    pub k: usize,
    pub n: usize,
    pub entries: DissimilarityMatrix,
    pub weights: WeightMatrix,
    pub block_weights: BlockWeights,
    pub policy: ImputationPolicy,
    pub tradeoff: TradeoffWeights,
    pub scheme: WeightScheme,
}

impl OmnibusMatrix {
    /// Imputed cross block for the condition pair `(a, b)`, `a < b`.
    pub fn cross_block(&self, a: usize, b: usize) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, n, |i, j| self.entries.get(a * n + i, b * n + j))
    }
}

fn check_deltas(deltas: &[DissimilarityMatrix]) -> Result<usize> {
    if deltas.len() < 2 {
        return Err(Error::SizeMismatch(format!("need at least 2 conditions, got {}", deltas.len())));
    }
    let n = deltas[0].n();
    if let Some(d) = deltas.iter().find(|d| d.n() != n) {
        return Err(Error::SizeMismatch(format!("conditions have {n} and {} objects", d.n())));
    }
    if n < 2 {
        return Err(Error::SizeMismatch("need at least 2 objects".into()));
    }
    Ok(n)
}

fn warn_if_unscaled(deltas: &[DissimilarityMatrix]) {
    let means: Vec<f64> = deltas
        .iter()
        .map(|d| {
            let v: Vec<f64> = d.off_diagonal().collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        })
        .collect();
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(0.0, f64::max);
    if lo > 0.0 && hi / lo > 10.0 {
        warn!("dissimilarity scales differ by {:.1}x; pre-scale before building the omnibus matrix", hi / lo);
    }
}

/// Assemble the omnibus matrix: `Delta_k` on the diagonal blocks, the
/// imputed `W` in every cross block.
pub fn build_omnibus(
    deltas: &[DissimilarityMatrix],
    policy: &ImputationPolicy,
    tradeoff: TradeoffWeights,
    scheme: WeightScheme,
) -> Result<OmnibusMatrix> {
    let n = check_deltas(deltas)?;
    policy.validate(n)?;
    warn_if_unscaled(deltas);
    let k = deltas.len();
    let bw = BlockWeights::new(scheme, tradeoff, k, n);
    let size = k * n;
    let mut e = Matrix::zeros(size, size);
    let mut w = Matrix::zeros(size, size);
    let set = |e: &mut Matrix, w: &mut Matrix, r: usize, c: usize, v: f64, wt: f64| {
        e[(r, c)] = v;
        e[(c, r)] = v;
        w[(r, c)] = wt;
        w[(c, r)] = wt;
    };
    for (b, d) in deltas.iter().enumerate() {
        for i in 0..n {
            for j in (i + 1)..n {
                set(&mut e, &mut w, b * n + i, b * n + j, d.get(i, j), bw.within);
            }
        }
    }
    for a in 0..k {
        for b in (a + 1)..k {
            for i in 0..n {
                set(&mut e, &mut w, a * n + i, b * n + i, policy.matched(i), bw.matched);
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if let Some(v) = policy.cross(&deltas[a], &deltas[b], i, j) {
                        set(&mut e, &mut w, a * n + i, b * n + j, v, bw.cross);
                    }
                }
            }
        }
    }
    Ok(OmnibusMatrix {
        k,
        n,
        entries: dissim::validate(e)?,
        weights: WeightMatrix::new(w)?,
        block_weights: bw,
        policy: policy.clone(),
        tradeoff,
        scheme,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    /// Mean squared residual over the `C(n, 2)` within-condition pairs.
    pub fidelity: Vec<f64>,
    /// Mean squared distance between matched points.
    pub commensurability: Vec<PairError>,
    /// Mean squared residual against the imputed cross dissimilarities over
    /// the `n (n - 1)` ordered cross-object pairs.
    pub separability: Vec<PairError>,
}

impl ErrorDecomposition {
    pub fn mean_fidelity(&self) -> f64 {
        self.fidelity.iter().sum::<f64>() / self.fidelity.len().max(1) as f64
    }

    pub fn total_fidelity(&self) -> f64 {
        self.fidelity.iter().sum()
    }

    /// Commensurability of the first condition pair.
    pub fn commensurability_01(&self) -> f64 {
        self.commensurability.first().map_or(0.0, |p| p.value)
    }
}

/// Evaluate the three error functionals. `cross` supplies the stand-in
/// cross dissimilarities per condition pair `(a, b)`, `a < b`, in
/// lexicographic order.
pub fn error_decomposition(
    configs: &[EmbeddingConfiguration],
    deltas: &[DissimilarityMatrix],
    cross: Option<&[Matrix]>,
) -> Result<ErrorDecomposition> {
    let k = configs.len();
    if k == 0 || deltas.len() != k {
        return Err(Error::ShapeMismatch(format!("{k} configurations for {} matrices", deltas.len())));
    }
    let n = configs[0].n();
    let m = configs[0].m();
    if configs.iter().any(|c| c.n() != n || c.m() != m) || deltas.iter().any(|d| d.n() != n) {
        return Err(Error::ShapeMismatch("configurations and matrices must share n and m".into()));
    }
    let pairs = (n * (n - 1) / 2).max(1) as f64;
    let fidelity = configs
        .iter()
        .zip(deltas)
        .map(|(c, d)| {
            let x = c.coords();
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let r = linalg::row_distance(x, i, x, j) - d.get(i, j);
                    s += r * r;
                }
            }
            s / pairs
        })
        .collect();
    let mut commensurability = Vec::new();
    let mut separability = Vec::new();
    let mut p = 0;
    for a in 0..k {
        for b in (a + 1)..k {
            let (xa, xb) = (configs[a].coords(), configs[b].coords());
            let c = (0..n).map(|i| linalg::row_distance(xa, i, xb, i).powi(2)).sum::<f64>() / n as f64;
            commensurability.push(PairError { a, b, value: c });
            if let Some(ws) = cross {
                let w = ws
                    .get(p)
                    .ok_or_else(|| Error::ShapeMismatch("missing cross block for a condition pair".into()))?;
                if w.shape() != (n, n) {
                    return Err(Error::ShapeMismatch("cross block must be n x n".into()));
                }
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            let r = linalg::row_distance(xa, i, xb, j) - w[(i, j)];
                            s += r * r;
                        }
                    }
                }
                separability.push(PairError { a, b, value: s / (n * (n - 1)).max(1) as f64 });
            }
            p += 1;
        }
    }
    Ok(ErrorDecomposition { fidelity, commensurability, separability })
}

#[derive(Debug, Clone)]
pub struct JofcFit {
    /// One configuration per condition, in the common coordinate system.
    pub configs: Vec<EmbeddingConfiguration>,
    /// All `Kn` points stacked by condition.
    pub joint: EmbeddingConfiguration,
    pub omnibus: OmnibusMatrix,
    pub errors: ErrorDecomposition,
    pub stress: f64,
    pub iterations: usize,
}

/// Raw-stress embedding of the omnibus matrix.
pub fn jofc_fit(
    deltas: &[DissimilarityMatrix],
    policy: &ImputationPolicy,
    tradeoff: TradeoffWeights,
    scheme: WeightScheme,
    m: usize,
    params: &SmacofParams,
    seed: u64,
) -> Result<JofcFit> {
    let omnibus = build_omnibus(deltas, policy, tradeoff, scheme)?;
    let res = mds::smacof_embed(&omnibus.entries, &omnibus.weights, m, SmacofInit::Classical, params, seed)?;
    let joint = res.config.centered();
    let n = omnibus.n;
    let configs: Vec<_> = (0..omnibus.k).map(|b| joint.rows_range(b * n, n)).collect();
    let cross: Option<Vec<Matrix>> = match policy.off_diagonal {
        OffDiagonalImputation::Missing => None,
        _ => {
            let mut v = Vec::new();
            for a in 0..omnibus.k {
                for b in (a + 1)..omnibus.k {
                    v.push(omnibus.cross_block(a, b));
                }
            }
            Some(v)
        }
    };
    let errors = error_decomposition(&configs, deltas, cross.as_deref())?;
    Ok(JofcFit { configs, joint, omnibus, errors, stress: res.stress.0, iterations: res.iterations })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct JofcOosParams {
    pub oos: OosParams,
    /// Embed the two test points jointly with an imputed mutual
    /// dissimilarity of zero instead of separately.
    pub joint: bool,
    pub weighting: OosWeighting,
}

/// Weights of the `2n` anchor terms when embedding a test point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OosWeighting {
    /// Own-condition anchors at the training within weight, the other
    /// condition's anchors at the training matched weight.
    Training,
    /// Every anchor term weighted equally.
    #[default]
    Uniform,
}

/// The augmented dissimilarity vector and weights for one test point that
/// belongs to condition `side` (0 or 1) of a two-condition fit.
pub fn augmented_inputs(
    fit: &JofcFit,
    side: usize,
    own: &[f64],
    cross: &[f64],
    weighting: OosWeighting,
) -> (Vec<f64>, Vec<f64>) {
    let n = fit.omnibus.n;
    let (within, matched) = match weighting {
        OosWeighting::Training => (fit.omnibus.block_weights.within, fit.omnibus.block_weights.matched),
        OosWeighting::Uniform => (1.0, 1.0),
    };
    let mut u = vec![0.0; 2 * n];
    let mut w = vec![0.0; 2 * n];
    for i in 0..n {
        u[side * n + i] = own[i];
        w[side * n + i] = within;
        u[(1 - side) * n + i] = cross[i];
        w[(1 - side) * n + i] = matched;
    }
    (u, w)
}

/// Out-of-sample embedding of a test pair `(y1, y2)` given `u1` (to the
/// condition-1 anchors) and `v2` (to the condition-2 anchors); the missing
/// cross dissimilarities are imputed as `(u1 + v2) / 2`.
pub fn jofc_oos(fit: &JofcFit, u1: &[f64], v2: &[f64], params: &JofcOosParams, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if fit.omnibus.k != 2 {
        return Err(Error::ShapeMismatch(format!("out-of-sample pair rule needs K = 2, fit has {}", fit.omnibus.k)));
    }
    let n = fit.omnibus.n;
    if u1.len() != n || v2.len() != n {
        return Err(Error::ShapeMismatch(format!("expected {n} dissimilarities per side")));
    }
    let imputed: Vec<f64> = u1.iter().zip(v2).map(|(a, b)| 0.5 * (a + b)).collect();
    let (a_u, a_w) = augmented_inputs(fit, 0, u1, &imputed, params.weighting);
    let (b_u, b_w) = augmented_inputs(fit, 1, v2, &imputed, params.weighting);
    if params.joint {
        let mutual_w = fit.omnibus.block_weights.matched;
        let (pts, _) = mds::oos_embed_pair(&fit.joint, [&a_u, &b_u], [&a_w, &b_w], (0.0, mutual_w), &params.oos, seed)?;
        let [y1, y2] = pts;
        return Ok((y1, y2));
    }
    let y1 = mds::oos_embed(&fit.joint, &a_u, &a_w, &params.oos, seed)?;
    let y2 = mds::oos_embed(&fit.joint, &b_u, &b_w, &params.oos, seed)?;
    Ok((y1.point, y2.point))
}
