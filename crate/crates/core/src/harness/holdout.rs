//! Hold-out power estimation for a fixed pair of dissimilarity matrices.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::power::validate_alphas;
use super::{restrict, stats, PowerCurve, ScaledPair};
use crate::dissim::{DissimilarityMatrix, ScalingMethod};
use crate::exec::Executor;
use crate::pipelines::{self, MatcherSpec};
use crate::seed::{self, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HoldoutPairing {
    /// Both held-out pairs give null statistics; both crossings give alternatives.
    #[default]
    BothCrossings,
    /// Only the first pair's condition-1 point against the second pair's condition-2 point.
    SingleCrossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub null: Vec<f64>,
    pub alt: Vec<f64>,
    /// Pooled over trials: one critical value per alpha from all null statistics.
    pub curve: PowerCurve,
}

fn trial(
    d1: &DissimilarityMatrix,
    d2: &DissimilarityMatrix,
    spec: &MatcherSpec,
    scaling: ScalingMethod,
    pairing: HoldoutPairing,
    t: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d1.n();
    let trial_seed = seed::derive_path(seed, &[tag::HOLDOUT, t as u64]);
    let mut rng = seed::rng(trial_seed);
    let held: Vec<usize> = index::sample(&mut rng, n, 2).into_vec();
    let keep: Vec<usize> = (0..n).filter(|i| !held.contains(i)).collect();
    let scaled = ScaledPair::new(&d1.select(&keep), &d2.select(&keep), scaling)?;
    let fitted = pipelines::fit(spec, &scaled.d1, &scaled.d2, seed::derive(trial_seed, tag::FIT))?;
    let stat = |a: usize, b: usize, j: u64| -> Result<f64> {
        let u = scaled.scale(0, &restrict(&d1.row(a), &keep));
        let v = scaled.scale(1, &restrict(&d2.row(b), &keep));
        let (y1, y2) = fitted.embed_test_pair(&u, &v, seed::derive(trial_seed, j))?;
        Ok(pipelines::test_statistic(&y1, &y2)?.0)
    };
    let (h0, h1) = (held[0], held[1]);
    let null = vec![stat(h0, h0, 0)?, stat(h1, h1, 1)?];
    let alt = match pairing {
        HoldoutPairing::BothCrossings => vec![stat(h0, h1, 2)?, stat(h1, h0, 3)?],
        HoldoutPairing::SingleCrossing => vec![stat(h0, h1, 2)?],
    };
    Ok((null, alt))
}

/// Repeatedly hold out two matched pairs, refit on the rest, and collect the
/// held-out matched (null) and crossed (alternative) statistics.
#[allow(clippy::too_many_arguments)]
pub fn holdout_experiment(
    d1: &DissimilarityMatrix,
    d2: &DissimilarityMatrix,
    spec: &MatcherSpec,
    trials: usize,
    alphas: &[f64],
    scaling: ScalingMethod,
    pairing: HoldoutPairing,
    seed: u64,
    exec: &Executor,
) -> Result<HoldoutResult> {
    if d1.n() != d2.n() {
        return Err(Error::SizeMismatch(format!("{} vs {} objects", d1.n(), d2.n())));
    }
    if d1.n() < 6 {
        return Err(Error::InsufficientData(format!("hold-out needs at least 6 matched pairs, got {}", d1.n())));
    }
    if trials < 1 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    validate_alphas(alphas)?;
    spec.validate()?;
    let per_trial = exec.try_map(trials, |t| trial(d1, d2, spec, scaling, pairing, t, seed))?;
    let null: Vec<f64> = per_trial.iter().flat_map(|(a, _)| a.iter().copied()).collect();
    let alt: Vec<f64> = per_trial.iter().flat_map(|(_, b)| b.iter().copied()).collect();
    let power = alphas
        .iter()
        .map(|&a| Ok(stats::exceedance(&alt, stats::critical_value(&null, a)?)))
        .collect::<Result<Vec<_>>>()?;
    let se = power.iter().map(|&p| (p * (1.0 - p) / alt.len() as f64).sqrt()).collect();
    let curve = PowerCurve {
        method: spec.method,
        alphas: alphas.to_vec(),
        power: power.clone(),
        std_error: se,
        n_mc: trials,
        s_null: null.len(),
        s_alt: alt.len(),
        replicate_power: vec![power],
    };
    Ok(HoldoutResult { null, alt, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipelines::Method;
    use crate::simgen::{gen_dirichlet, ModelParams};

    fn data(r: f64, n: usize) -> Vec<DissimilarityMatrix> {
        gen_dirichlet(&ModelParams { p: 3, q: 3, r, a: 0.0, k: 2, n }, 3).unwrap().deltas
    }

    #[test]
    fn one_trial_counts() {
        let d = data(100.0, 12);
        let spec = MatcherSpec::new(Method::Pm, 2);
        let run = |s| {
            holdout_experiment(&d[0], &d[1], &spec, 1, &[0.1], ScalingMethod::MeanOne, HoldoutPairing::BothCrossings, s, &Executor::sequential())
                .unwrap()
        };
        let r = run(1);
        assert_eq!((r.null.len(), r.alt.len()), (2, 2));
        assert_eq!(r, run(1));
    }

    #[test]
    fn strong_signal_separates() {
        let d = data(1e6, 20);
        for method in [Method::Pm, Method::Jofc] {
            let spec = MatcherSpec::new(method, 2);
            let r = holdout_experiment(
                &d[0],
                &d[1],
                &spec,
                20,
                &[0.1],
                ScalingMethod::MeanOne,
                HoldoutPairing::BothCrossings,
                7,
                &Executor::with_workers(2),
            )
            .unwrap();
            let good = (0..20).filter(|&t| r.null[2 * t].max(r.null[2 * t + 1]) < r.alt[2 * t].min(r.alt[2 * t + 1])).count();
            assert!(good >= 19, "{method:?}: {good}");
        }
    }

    #[test]
    fn too_small() {
        let d = data(10.0, 5);
        let spec = MatcherSpec::new(Method::Pm, 1);
        let e = holdout_experiment(&d[0], &d[1], &spec, 1, &[0.1], ScalingMethod::None, HoldoutPairing::BothCrossings, 0, &Executor::sequential());
        assert!(matches!(e, Err(Error::InsufficientData(_))));
    }
}
