//! Synthetic matched data: a Dirichlet product model and a Gaussian analogue.
//!
//! Each object has a latent center. Every condition observes the object
//! through a signal block concentrated around the center, concatenated with
//! an independent noise block. The blocks are weighted by `1 - a` and `a`.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dissim::{self, DissimilarityMatrix};
use crate::linalg::{self, Matrix};
use crate::seed::{self, tag, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Dirichlet,
    Gaussian,
}

/// Parameters shared by both generators.
///
/// `p` and `q` are the signal and noise dimensions, `r` the matchedness
/// concentration (inverse variance for the Gaussian model), `a` the noise
/// weight, `k` the number of conditions and `n` the number of objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub p: usize,
    pub q: usize,
    pub r: f64,
    pub a: f64,
    #[serde(default = "two")]
    pub k: usize,
    pub n: usize,
}

fn two() -> usize {
    2
}

pub type DirichletProductParams = ModelParams;
pub type GaussianParams = ModelParams;

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.p < 1 {
            return bad("p must be at least 1");
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("r must be positive and finite");
        }
        if !(0.0..=1.0).contains(&self.a) {
            return bad("a must lie in [0, 1]");
        }
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        Ok(())
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    /// Length of the latent center.
    pub fn latent_dim(&self, model: Model) -> usize {
        match model {
            Model::Dirichlet => self.p + 1,
            Model::Gaussian => self.p,
        }
    }

    /// Length of the signal block.
    pub fn signal_dim(&self, model: Model) -> usize {
        self.latent_dim(model)
    }

    /// Length of concatenated observation vectors.
    pub fn ambient_dim(&self, model: Model) -> usize {
        match model {
            Model::Dirichlet => self.p + self.q + 2,
            Model::Gaussian => self.p + self.q,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedDataset {
    pub model: Model,
    pub params: ModelParams,
    pub seed: u64,
    /// One latent center per object.
    pub latent: Vec<Vec<f64>>,
    /// `points[k][i]`: object `i` observed in condition `k`.
    pub points: Vec<Vec<Vec<f64>>>,
    #[serde(skip)]
    pub deltas: Vec<DissimilarityMatrix>,
}

impl MatchedDataset {
    pub fn n(&self) -> usize {
        self.latent.len()
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// Observation matrix of condition `k` (objects as rows).
    pub fn condition_matrix(&self, k: usize) -> Matrix {
        rows_to_matrix(&self.points[k])
    }

    /// Restrict to a subset of objects, keeping their order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            model: self.model,
            params: self.params.with_n(idx.len()),
            seed: self.seed,
            latent: idx.iter().map(|&i| self.latent[i].clone()).collect(),
            points: self.points.iter().map(|pk| idx.iter().map(|&i| pk[i].clone()).collect()).collect(),
            deltas: self.deltas.iter().map(|d| d.select(idx)).collect(),
        }
    }

    /// Distances from `y` to every object of condition `k`.
    pub fn dissims_to(&self, k: usize, y: &[f64]) -> Vec<f64> {
        self.points[k].iter().map(|x| linalg::euclidean(x, y)).collect()
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Matrix {
    let d = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

fn euclidean_deltas(points: &[Vec<Vec<f64>>]) -> Result<Vec<DissimilarityMatrix>> {
    points.iter().map(|pk| dissim::validate(linalg::pairwise_distances(&rows_to_matrix(pk)))).collect()
}

/// Flat Dirichlet draw on the simplex with `len` coordinates.
fn dirichlet_flat(rng: &mut Rng, len: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    normalize(g)
}

fn dirichlet(rng: &mut Rng, alpha: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    normalize(g)
}

fn normalize(mut g: Vec<f64>) -> Vec<f64> {
    let s: f64 = g.iter().sum();
    if s > 0.0 {
        g.iter_mut().for_each(|v| *v /= s);
    } else {
        // every gamma draw underflowed; fall back to the barycenter
        let len = g.len() as f64;
        g.iter_mut().for_each(|v| *v = 1.0 / len);
    }
    g
}

fn gaussian(rng: &mut Rng, len: usize, mean: Option<&[f64]>, sd: f64) -> Vec<f64> {
    (0..len)
        .map(|j| mean.map_or(0.0, |m| m[j]) + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn draw_latent(model: Model, params: &ModelParams, rng: &mut Rng) -> Vec<f64> {
    match model {
        Model::Dirichlet => dirichlet_flat(rng, params.p + 1),
        Model::Gaussian => gaussian(rng, params.p, None, 1.0),
    }
}

fn draw_observation(model: Model, params: &ModelParams, latent: &[f64], rng: &mut Rng) -> Vec<f64> {
    let (signal, noise) = match model {
        Model::Dirichlet => {
            let alpha: Vec<f64> = latent.iter().map(|g| params.r * g + 1.0).collect();
            (dirichlet(rng, &alpha), dirichlet_flat(rng, params.q + 1))
        }
        Model::Gaussian => {
            let sd = params.r.sqrt().recip();
            (gaussian(rng, params.p, Some(latent), sd), gaussian(rng, params.q, None, 1.0))
        }
    };
    signal
        .into_iter()
        .map(|v| (1.0 - params.a) * v)
        .chain(noise.into_iter().map(|v| params.a * v))
        .collect()
}

/// Draw a training set. Object `i` uses streams derived from `(seed, i)`, so
/// the first `n` objects do not depend on the requested total.
pub fn generate(model: Model, params: &ModelParams, seed: u64) -> Result<MatchedDataset> {
    params.validate()?;
    let mut latent = Vec::with_capacity(params.n);
    let mut points = vec![Vec::with_capacity(params.n); params.k];
    for i in 0..params.n {
        let obj = seed::derive_path(seed, &[tag::DATA, i as u64]);
        let c = draw_latent(model, params, &mut seed::rng(seed::derive(obj, 0)));
        for (k, pk) in points.iter_mut().enumerate() {
            let mut rng = seed::rng(seed::derive_path(obj, &[tag::CONDITION, k as u64]));
            pk.push(draw_observation(model, params, &c, &mut rng));
        }
        latent.push(c);
    }
    let deltas = euclidean_deltas(&points)?;
    Ok(MatchedDataset { model, params: *params, seed, latent, points, deltas })
}

pub fn gen_dirichlet(params: &DirichletProductParams, seed: u64) -> Result<MatchedDataset> {
    generate(Model::Dirichlet, params, seed)
}

pub fn gen_gaussian(params: &GaussianParams, seed: u64) -> Result<MatchedDataset> {
    generate(Model::Gaussian, params, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Both observations share one new latent center.
    Matched,
    /// Each observation gets its own independent latent center.
    Unmatched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPair {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    /// Distances from `y1` to the condition-1 training points.
    pub u1: Vec<f64>,
    /// Distances from `y2` to the condition-2 training points.
    pub v2: Vec<f64>,
    pub latent: [Vec<f64>; 2],
}

/// Draw a new observation pair relative to the training anchors of `dataset`.
pub fn gen_test_pair(dataset: &MatchedDataset, hypothesis: Hypothesis, seed: u64) -> Result<TestPair> {
    dataset.params.validate()?;
    let (model, params) = (dataset.model, &dataset.params);
    let c1 = draw_latent(model, params, &mut seed::rng(seed::derive(seed, 0)));
    let c2 = match hypothesis {
        Hypothesis::Matched => c1.clone(),
        Hypothesis::Unmatched => draw_latent(model, params, &mut seed::rng(seed::derive(seed, 1))),
    };
    let y1 = draw_observation(model, params, &c1, &mut seed::rng(seed::derive(seed, 2)));
    let y2 = draw_observation(model, params, &c2, &mut seed::rng(seed::derive(seed, 3)));
    Ok(TestPair {
        u1: dataset.dissims_to(0, &y1),
        v2: dataset.dissims_to(1, &y2),
        y1,
        y2,
        latent: [c1, c2],
    })
}
