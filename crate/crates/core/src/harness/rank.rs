//! Retrieval experiment: rank of the true match among held-out candidates.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{restrict, ScaledPair};
use crate::dissim::{DissimilarityMatrix, ScalingMethod};
use crate::exec::Executor;
use crate::linalg;
use crate::pipelines::{self, MatcherSpec, Method};
use crate::seed::{self, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankConfig {
    /// Candidates per trial.
    pub z: usize,
    pub ms: Vec<usize>,
    pub trials: usize,
    pub scaling: ScalingMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub trial: usize,
    pub m: usize,
    pub method: Method,
    /// In `1..=z`.
    pub rank: usize,
    pub z: usize,
}

/// 1-based rank of `truth` when candidates are sorted by distance, ties
/// going to the lower index.
pub fn rank_of(distances: &[f64], truth: usize) -> usize {
    let dt = distances[truth];
    1 + distances
        .iter()
        .enumerate()
        .filter(|&(i, &d)| d < dt || (d == dt && i < truth))
        .count()
}

fn trial(
    d1: &DissimilarityMatrix,
    d2: &DissimilarityMatrix,
    specs: &[MatcherSpec],
    cfg: &RankConfig,
    t: usize,
    seed: u64,
) -> Result<Vec<RankResult>> {
    let n = d1.n();
    let trial_seed = seed::derive_path(seed, &[tag::TRIAL, t as u64]);
    let mut rng = seed::rng(trial_seed);
    let held: Vec<usize> = index::sample(&mut rng, n, cfg.z).into_vec();
    let probe = rng.random_range(0..cfg.z);
    let keep: Vec<usize> = {
        let mut mask = vec![true; n];
        held.iter().for_each(|&i| mask[i] = false);
        (0..n).filter(|&i| mask[i]).collect()
    };
    let scaled = ScaledPair::new(&d1.select(&keep), &d2.select(&keep), cfg.scaling)?;
    let mut out = Vec::new();
    for &m in &cfg.ms {
        for spec in specs {
            let spec = MatcherSpec { m, ..spec.clone() };
            let fitted = pipelines::fit(&spec, &scaled.d1, &scaled.d2, seed::derive(trial_seed, tag::FIT))?;
            let oos = seed::derive(trial_seed, tag::OOS);
            let v = scaled.scale(1, &restrict(&d2.row(held[probe]), &keep));
            let y = fitted.embed_single(1, &v, seed::derive(oos, u64::MAX))?;
            let dist = held
                .iter()
                .enumerate()
                .map(|(c, &i)| {
                    let u = scaled.scale(0, &restrict(&d1.row(i), &keep));
                    Ok(linalg::euclidean(&fitted.embed_single(0, &u, seed::derive(oos, c as u64))?, &y))
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(RankResult { trial: t, m, method: spec.method, rank: rank_of(&dist, probe), z: cfg.z });
        }
    }
    Ok(out)
}

/// Ranks for every (trial, m, method), ordered that way.
pub fn rank_experiment(
    d1: &DissimilarityMatrix,
    d2: &DissimilarityMatrix,
    specs: &[MatcherSpec],
    cfg: &RankConfig,
    seed: u64,
    exec: &Executor,
) -> Result<Vec<RankResult>> {
    if d1.n() != d2.n() {
        return Err(Error::SizeMismatch(format!("{} vs {} objects", d1.n(), d2.n())));
    }
    if cfg.z < 2 {
        return Err(Error::InvalidParams("z must be at least 2".into()));
    }
    if cfg.trials < 1 || cfg.ms.is_empty() {
        return Err(Error::InvalidParams("need at least one trial and one m".into()));
    }
    let max_m = cfg.ms.iter().copied().max().unwrap_or(1);
    if d1.n() < cfg.z + max_m + 1 {
        return Err(Error::InsufficientData(format!(
            "{} objects cannot supply {} candidates plus a training set for m = {}",
            d1.n(),
            cfg.z,
            max_m
        )));
    }
    let per = exec.try_map(cfg.trials, |t| trial(d1, d2, specs, cfg, t, seed))?;
    Ok(per.into_iter().flatten().collect())
}
