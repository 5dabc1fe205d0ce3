//! The three end-to-end matchers behind one fit / embed / test interface.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{self, CcaMaps, OrthogonalTransform, Ridge, Side};
use crate::dissim::DissimilarityMatrix;
use crate::linalg::{self, Matrix};
use crate::mds::{self, ClassicalFit, EmbeddingConfiguration, OosParams, SmacofInit, SmacofParams, WeightMatrix};
use crate::omnibus::{self, ErrorDecomposition, ImputationPolicy, JofcFit, JofcOosParams, OosWeighting, TradeoffWeights, WeightScheme};
use crate::seed::{self, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pm,
    Cca,
    Jofc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Pm, Method::Cca, Method::Jofc];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Pm => "pm",
            Method::Cca => "cca",
            Method::Jofc => "jofc",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Method::Pm => 101,
            Method::Cca => 102,
            Method::Jofc => 103,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pm" => Ok(Method::Pm),
            "cca" => Ok(Method::Cca),
            "jofc" => Ok(Method::Jofc),
            other => Err(Error::InvalidParams(format!("unknown method {other:?}"))),
        }
    }
}

/// How the `n - 1` dimensional step of the cca pipeline is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HighDimEmbedding {
    #[default]
    Classical,
    RawStress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherSpec {
    pub method: Method,
    pub m: usize,
    pub tradeoff: TradeoffWeights,
    pub policy: ImputationPolicy,
    pub scheme: WeightScheme,
    /// `None` selects the scale-aware default.
    pub ridge: Option<f64>,
    pub mds: SmacofParams,
    pub oos: OosParams,
    pub cca_high_dim: HighDimEmbedding,
    /// Out-of-sample rule for the cca high-dimensional step.
    pub cca_oos: HighDimEmbedding,
    pub jofc_joint_oos: bool,
    pub jofc_oos_weighting: OosWeighting,
}

impl Default for MatcherSpec {
    fn default() -> Self {
        Self {
            method: Method::Jofc,
            m: 2,
            tradeoff: TradeoffWeights::default(),
            policy: ImputationPolicy::default(),
            scheme: WeightScheme::default(),
            ridge: None,
            mds: SmacofParams::default(),
            oos: OosParams::default(),
            cca_high_dim: HighDimEmbedding::default(),
            cca_oos: HighDimEmbedding::default(),
            jofc_joint_oos: false,
            jofc_oos_weighting: OosWeighting::default(),
        }
    }
}

impl MatcherSpec {
    pub fn new(method: Method, m: usize) -> Self {
        Self { method, m, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if matches!(self.ridge, Some(r) if !(r >= 0.0)) {
            return Err(Error::InvalidParams("ridge must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Stable identifier of a (spec, seed) pair.
pub fn matcher_id(spec: &MatcherSpec, seed: u64) -> String {
    let payload = serde_json::to_vec(&(spec, seed)).expect("spec serializes");
    let digest = Sha256::digest(&payload);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum State {
    Pm {
        /// Centered pre-alignment configurations.
        raw: [EmbeddingConfiguration; 2],
        q: OrthogonalTransform,
    },
    Cca {
        high: [HighDim; 2],
        maps: CcaMaps,
    },
    Jofc(Box<JofcFit>),
}

#[derive(Debug, Clone)]
struct HighDim {
    classical: ClassicalFit,
    /// Raw-stress refinement when requested.
    raw: Option<EmbeddingConfiguration>,
}

impl HighDim {
    fn config(&self) -> &EmbeddingConfiguration {
        self.raw.as_ref().unwrap_or(&self.classical.config)
    }
}

/// A trained matcher: anchors of both conditions in one coordinate system.
#[derive(Debug, Clone)]
pub struct FittedMatcher {
    pub spec: MatcherSpec,
    pub seed: u64,
    pub anchors: [EmbeddingConfiguration; 2],
    pub diagnostics: ErrorDecomposition,
    state: State,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TestStatistic(pub f64);

fn check_pair(d1: &DissimilarityMatrix, d2: &DissimilarityMatrix) -> Result<usize> {
    if d1.n() != d2.n() {
        return Err(Error::SizeMismatch(format!("{} vs {} objects", d1.n(), d2.n())));
    }
    if d1.n() < 2 {
        return Err(Error::InsufficientData("need at least 2 matched pairs".into()));
    }
    Ok(d1.n())
}

/// Train a matcher on matched dissimilarities.
pub fn fit(spec: &MatcherSpec, d1: &DissimilarityMatrix, d2: &DissimilarityMatrix, seed: u64) -> Result<FittedMatcher> {
    spec.validate()?;
    let n = check_pair(d1, d2)?;
    let fit_seed = seed::derive_path(seed, &[tag::FIT, spec.method.tag()]);
    match spec.method {
        Method::Pm => {
            if spec.m > n - 1 {
                return Err(Error::DimensionOutOfRange { m: spec.m, max: n - 1 });
            }
            let w = WeightMatrix::unit(n);
            let c1 = mds::smacof_embed(d1, &w, spec.m, SmacofInit::Classical, &spec.mds, seed::derive(fit_seed, 1))?;
            let c2 = mds::smacof_embed(d2, &w, spec.m, SmacofInit::Classical, &spec.mds, seed::derive(fit_seed, 2))?;
            fit_pm_from(spec.clone(), seed, [c1.config, c2.config], d1, d2)
        }
        Method::Cca => fit_cca(spec, d1, d2, seed, fit_seed),
        Method::Jofc => {
            let f = omnibus::jofc_fit(
                &[d1.clone(), d2.clone()],
                &spec.policy,
                spec.tradeoff,
                spec.scheme,
                spec.m,
                &spec.mds,
                fit_seed,
            )?;
            Ok(FittedMatcher {
                spec: spec.clone(),
                seed,
                anchors: [f.configs[0].clone(), f.configs[1].clone()],
                diagnostics: f.errors.clone(),
                state: State::Jofc(Box::new(f)),
            })
        }
    }
}

/// Build a pm matcher from given per-condition configurations (e.g. the
/// best of several SMACOF starts).
pub fn fit_pm_from(
    spec: MatcherSpec,
    seed: u64,
    configs: [EmbeddingConfiguration; 2],
    d1: &DissimilarityMatrix,
    d2: &DissimilarityMatrix,
) -> Result<FittedMatcher> {
    let [a, b] = configs;
    let raw = [a.centered(), b.centered()];
    let q = align::procrustes(&raw[0], &raw[1], false)?;
    let aligned = EmbeddingConfiguration::new(align::apply_transform(&q, raw[1].coords())?)?;
    let anchors = [raw[0].clone(), aligned];
    let diagnostics = omnibus::error_decomposition(&anchors, &[d1.clone(), d2.clone()], None)?;
    Ok(FittedMatcher { spec, seed, anchors, diagnostics, state: State::Pm { raw, q } })
}

fn fit_cca(spec: &MatcherSpec, d1: &DissimilarityMatrix, d2: &DissimilarityMatrix, seed: u64, fit_seed: u64) -> Result<FittedMatcher> {
    let n = d1.n();
    let hd = n - 1;
    if spec.m > hd {
        return Err(Error::DimensionOutOfRange { m: spec.m, max: hd });
    }
    let mut high = Vec::with_capacity(2);
    for (k, d) in [d1, d2].into_iter().enumerate() {
        let classical = mds::classical_fit(d.entries(), hd)?;
        let raw = match spec.cca_high_dim {
            HighDimEmbedding::Classical => None,
            HighDimEmbedding::RawStress => Some(
                mds::smacof_embed(
                    d,
                    &WeightMatrix::unit(n),
                    hd,
                    SmacofInit::Given(classical.config.clone()),
                    &spec.mds,
                    seed::derive(fit_seed, k as u64 + 1),
                )?
                .config,
            ),
        };
        high.push(HighDim { classical, raw });
    }
    let high: [HighDim; 2] = [high.remove(0), high.remove(0)];
    let ridge = spec.ridge.map_or(Ridge::Auto, Ridge::Fixed);
    let maps = align::cca_fit(high[0].config().coords(), high[1].config().coords(), spec.m, ridge)?;
    let s1 = align::cca_project(&maps, Side::First, high[0].config().coords())?;
    let s2 = align::cca_project(&maps, Side::Second, high[1].config().coords())?;
    let anchors = [EmbeddingConfiguration::new(s1)?, EmbeddingConfiguration::new(s2)?];
    let diagnostics = omnibus::error_decomposition(&anchors, &[d1.clone(), d2.clone()], None)?;
    Ok(FittedMatcher { spec: spec.clone(), seed, anchors, diagnostics, state: State::Cca { high, maps } })
}

impl FittedMatcher {
    pub fn n(&self) -> usize {
        self.anchors[0].n()
    }

    pub fn method(&self) -> Method {
        self.spec.method
    }

    pub fn id(&self) -> String {
        matcher_id(&self.spec, self.seed)
    }

    /// Procrustes rotation (pm only).
    pub fn procrustes(&self) -> Option<&OrthogonalTransform> {
        match &self.state {
            State::Pm { q, .. } => Some(q),
            _ => None,
        }
    }

    /// Centered pre-alignment configurations (pm only).
    pub fn pre_alignment(&self) -> Option<&[EmbeddingConfiguration; 2]> {
        match &self.state {
            State::Pm { raw, .. } => Some(raw),
            _ => None,
        }
    }

    /// High-dimensional configurations and the fitted maps (cca only).
    pub fn cca_parts(&self) -> Option<(&Matrix, &Matrix, &CcaMaps)> {
        match &self.state {
            State::Cca { high, maps } => Some((high[0].config().coords(), high[1].config().coords(), maps)),
            _ => None,
        }
    }

    pub fn jofc(&self) -> Option<&JofcFit> {
        match &self.state {
            State::Jofc(f) => Some(f),
            _ => None,
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::ShapeMismatch(format!("expected {} dissimilarities, got {}", self.n(), v.len())));
        }
        Ok(())
    }

    fn high_dim_oos(&self, high: &HighDim, dissims: &[f64], seed: u64) -> Result<Vec<f64>> {
        match self.spec.cca_oos {
            HighDimEmbedding::Classical => high.classical.embed_oos(dissims),
            HighDimEmbedding::RawStress => {
                let w = vec![1.0; dissims.len()];
                Ok(mds::oos_embed(high.config(), dissims, &w, &self.spec.oos, seed)?.point)
            }
        }
    }

    /// Embed a test pair: `u1` are dissimilarities of `y1` to the
    /// condition-1 training objects, `v2` of `y2` to the condition-2 ones.
    pub fn embed_test_pair(&self, u1: &[f64], v2: &[f64], seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(u1)?;
        self.check_len(v2)?;
        let oos_seed = seed::derive(seed, tag::OOS);
        match &self.state {
            State::Pm { raw, q } => {
                let w = vec![1.0; self.n()];
                let y1 = mds::oos_embed(&raw[0], u1, &w, &self.spec.oos, oos_seed)?.point;
                let y2 = mds::oos_embed(&raw[1], v2, &w, &self.spec.oos, oos_seed)?.point;
                Ok((y1, align::apply_transform_point(q, &y2)?))
            }
            State::Cca { high, maps } => {
                let h1 = self.high_dim_oos(&high[0], u1, oos_seed)?;
                let h2 = self.high_dim_oos(&high[1], v2, oos_seed)?;
                Ok((align::cca_project_point(maps, Side::First, &h1)?, align::cca_project_point(maps, Side::Second, &h2)?))
            }
            State::Jofc(f) => {
                let params = JofcOosParams { oos: self.spec.oos, joint: self.spec.jofc_joint_oos, weighting: self.spec.jofc_oos_weighting };
                omnibus::jofc_oos(f, u1, v2, &params, oos_seed)
            }
        }
    }

    /// Embed a single observation of condition `side` (0 or 1). For jofc the
    /// unobserved cross dissimilarities are imputed by the observation's own
    /// within-condition dissimilarities.
    pub fn embed_single(&self, side: usize, dissims: &[f64], seed: u64) -> Result<Vec<f64>> {
        self.check_len(dissims)?;
        if side > 1 {
            return Err(Error::InvalidParams(format!("side {side} not in {{0, 1}}")));
        }
        let oos_seed = seed::derive(seed, tag::OOS);
        match &self.state {
            State::Pm { raw, q } => {
                let w = vec![1.0; self.n()];
                let y = mds::oos_embed(&raw[side], dissims, &w, &self.spec.oos, oos_seed)?.point;
                if side == 0 {
                    Ok(y)
                } else {
                    align::apply_transform_point(q, &y)
                }
            }
            State::Cca { high, maps } => {
                let h = self.high_dim_oos(&high[side], dissims, oos_seed)?;
                let s = if side == 0 { Side::First } else { Side::Second };
                align::cca_project_point(maps, s, &h)
            }
            State::Jofc(f) => {
                let (u, w) = omnibus::augmented_inputs(f, side, dissims, dissims, self.spec.jofc_oos_weighting);
                Ok(mds::oos_embed(&f.joint, &u, &w, &self.spec.oos, oos_seed)?.point)
            }
        }
    }

    /// Training error decomposition plus identifying metadata.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "matcher_id": self.id(),
            "method": self.spec.method,
            "seed": self.seed,
            "spec": self.spec,
            "errors": self.diagnostics,
            "procrustes": self.procrustes(),
            "cca": self.cca_parts().map(|(_, _, maps)| maps),
            "jofc_stress": self.jofc().map(|f| f.stress),
        })
    }
}

/// Euclidean distance between the embedded test points.
pub fn test_statistic(y1: &[f64], y2: &[f64]) -> Result<TestStatistic> {
    if y1.len() != y2.len() {
        return Err(Error::ShapeMismatch(format!("points of dimension {} and {}", y1.len(), y2.len())));
    }
    Ok(TestStatistic(linalg::euclidean(y1, y2)))
}
