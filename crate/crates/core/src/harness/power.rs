//! Power curves from repeated train / null / alternative simulations.

use serde::{Deserialize, Serialize};

use super::{stats, ScaledPair};
use crate::dissim::ScalingMethod;
use crate::exec::Executor;
use crate::omnibus::ErrorDecomposition;
use crate::pipelines::{self, FittedMatcher, MatcherSpec, Method};
use crate::seed::{self, tag};
use crate::simgen::{self, Hypothesis, MatchedDataset, Model, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullMode {
    /// Critical values from each replicate's own null sample.
    #[default]
    PerReplicate,
    /// Critical values from the null samples of all replicates combined.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub model: Model,
    pub params: ModelParams,
    pub n_mc: usize,
    /// Null test pairs per replicate.
    pub s_null: usize,
    /// Alternative test pairs per replicate.
    pub s_alt: usize,
    pub alphas: Vec<f64>,
    pub scaling: ScalingMethod,
    pub null_mode: NullMode,
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_mc < 1 || self.s_null < 1 || self.s_alt < 1 {
            return Err(Error::InvalidParams("n_mc, s_null and s_alt must be at least 1".into()));
        }
        validate_alphas(&self.alphas)
    }
}

pub fn validate_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidParams("empty alpha grid".into()));
    }
    if let Some(&a) = alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::AlphaOutOfRange(a));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("alpha grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub method: Method,
    pub alphas: Vec<f64>,
    pub power: Vec<f64>,
    /// Standard error of `power` across replicates.
    pub std_error: Vec<f64>,
    pub n_mc: usize,
    pub s_null: usize,
    pub s_alt: usize,
    /// `replicate_power[r][j]`: conditional power of replicate `r` at `alphas[j]`.
    pub replicate_power: Vec<Vec<f64>>,
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub null: Vec<f64>,
    pub alt: Vec<f64>,
    pub errors: ErrorDecomposition,
    /// Grassmann distance of the two pre-alignment pm subspaces, when requested.
    pub hausdorff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudy {
    pub curves: Vec<PowerCurve>,
    /// `outcomes[r][method]`.
    pub outcomes: Vec<Vec<ReplicateOutcome>>,
}

/// Statistics of `count` fresh pairs under `hypothesis`, embedded by `fitted`.
fn statistics(
    fitted: &FittedMatcher,
    data: &MatchedDataset,
    scaled: &ScaledPair,
    hypothesis: Hypothesis,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let base = match hypothesis {
        Hypothesis::Matched => tag::NULL_PAIR,
        Hypothesis::Unmatched => tag::ALT_PAIR,
    };
    (0..count)
        .map(|j| {
            let pair_seed = seed::derive_path(seed, &[base, j as u64]);
            let pair = simgen::gen_test_pair(data, hypothesis, pair_seed)?;
            let (y1, y2) = fitted.embed_test_pair(&scaled.scale(0, &pair.u1), &scaled.scale(1, &pair.v2), pair_seed)?;
            Ok(pipelines::test_statistic(&y1, &y2)?.0)
        })
        .collect()
}

/// Sorted null sample of `s` matched pairs drawn around `data`'s anchors.
pub fn null_distribution(
    fitted: &FittedMatcher,
    data: &MatchedDataset,
    scaling: ScalingMethod,
    s: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if s < 1 {
        return Err(Error::InvalidParams("null sample size must be at least 1".into()));
    }
    let scaled = ScaledPair::new(&data.deltas[0], &data.deltas[1], scaling)?;
    let mut t = statistics(fitted, data, &scaled, Hypothesis::Matched, s, seed)?;
    t.sort_by(f64::total_cmp);
    Ok(t)
}

/// Run every spec on one replicate. All methods see the same training set
/// and the same test pairs.
pub fn run_replicate(
    specs: &[MatcherSpec],
    cfg: &PowerConfig,
    replicate: usize,
    seed: u64,
    with_hausdorff: bool,
) -> Result<Vec<ReplicateOutcome>> {
    let rep_seed = seed::derive_path(seed, &[tag::TRIAL, replicate as u64]);
    let data = simgen::generate(cfg.model, &cfg.params, seed::derive(rep_seed, tag::DATA))?;
    let scaled = ScaledPair::new(&data.deltas[0], &data.deltas[1], cfg.scaling)?;
    specs
        .iter()
        .map(|spec| {
            let fitted = pipelines::fit(spec, &scaled.d1, &scaled.d2, seed::derive(rep_seed, tag::FIT))?;
            let null = statistics(&fitted, &data, &scaled, Hypothesis::Matched, cfg.s_null, rep_seed)?;
            let alt = statistics(&fitted, &data, &scaled, Hypothesis::Unmatched, cfg.s_alt, rep_seed)?;
            let hausdorff = match (with_hausdorff, spec.method) {
                (true, Method::Pm) => Some(super::grassmann::pm_subspace_distance(&fitted, &data)?),
                _ => None,
            };
            Ok(ReplicateOutcome { null, alt, errors: fitted.diagnostics.clone(), hausdorff })
        })
        .collect()
}

/// Conditional power per replicate and alpha for method index `mi`.
pub(crate) fn conditional_powers(
    outcomes: &[Vec<ReplicateOutcome>],
    mi: usize,
    alphas: &[f64],
    mode: NullMode,
) -> Result<Vec<Vec<f64>>> {
    let pooled = match mode {
        NullMode::Pooled => {
            let mut all: Vec<f64> = outcomes.iter().flat_map(|o| o[mi].null.iter().copied()).collect();
            all.sort_by(f64::total_cmp);
            Some(alphas.iter().map(|&a| stats::critical_value_sorted(&all, a)).collect::<Result<Vec<_>>>()?)
        }
        NullMode::PerReplicate => None,
    };
    outcomes
        .iter()
        .map(|o| {
            let o = &o[mi];
            let mut null = o.null.clone();
            null.sort_by(f64::total_cmp);
            alphas
                .iter()
                .enumerate()
                .map(|(j, &a)| {
                    let c = match &pooled {
                        Some(cs) => cs[j],
                        None => stats::critical_value_sorted(&null, a)?,
                    };
                    Ok(stats::exceedance(&o.alt, c))
                })
                .collect()
        })
        .collect()
}

pub(crate) fn curve_from(method: Method, cfg: &PowerConfig, replicate_power: Vec<Vec<f64>>) -> PowerCurve {
    let columns: Vec<Vec<f64>> =
        (0..cfg.alphas.len()).map(|j| replicate_power.iter().map(|r| r[j]).collect()).collect();
    PowerCurve {
        method,
        alphas: cfg.alphas.clone(),
        power: columns.iter().map(|c| stats::mean(c)).collect(),
        std_error: columns.iter().map(|c| stats::std_error(c)).collect(),
        n_mc: cfg.n_mc,
        s_null: cfg.s_null,
        s_alt: cfg.s_alt,
        replicate_power,
    }
}

/// Power curves of several matchers estimated on shared replicates.
pub fn power_curves(specs: &[MatcherSpec], cfg: &PowerConfig, seed: u64, exec: &Executor) -> Result<PowerStudy> {
    cfg.validate()?;
    for s in specs {
        s.validate()?;
    }
    let outcomes = exec.try_map(cfg.n_mc, |r| run_replicate(specs, cfg, r, seed, false))?;
    let curves = specs
        .iter()
        .enumerate()
        .map(|(mi, spec)| Ok(curve_from(spec.method, cfg, conditional_powers(&outcomes, mi, &cfg.alphas, cfg.null_mode)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerStudy { curves, outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: f64) -> PowerConfig {
        PowerConfig {
            model: Model::Dirichlet,
            params: ModelParams { p: 2, q: 2, r: 50.0, a, k: 2, n: 10 },
            n_mc: 3,
            s_null: 20,
            s_alt: 20,
            alphas: vec![0.05, 0.1, 0.3, 0.5],
            scaling: ScalingMethod::MeanOne,
            null_mode: NullMode::PerReplicate,
        }
    }

    #[test]
    fn curves_are_monotone_and_deterministic() {
        let specs = [MatcherSpec::new(Method::Pm, 2), MatcherSpec::new(Method::Jofc, 2)];
        let c = cfg(0.1);
        let a = power_curves(&specs, &c, 5, &Executor::sequential()).unwrap();
        let b = power_curves(&specs, &c, 5, &Executor::with_workers(3)).unwrap();
        assert_eq!(a, b);
        for curve in &a.curves {
            assert!(curve.power.iter().all(|p| (0.0..=1.0).contains(p)));
            for r in &curve.replicate_power {
                assert!(r.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn null_distribution_basics() {
        let data = simgen::gen_dirichlet(&ModelParams { p: 2, q: 1, r: 20.0, a: 0.1, k: 2, n: 8 }, 1).unwrap();
        let scaled = ScaledPair::new(&data.deltas[0], &data.deltas[1], ScalingMethod::MeanOne).unwrap();
        let f = pipelines::fit(&MatcherSpec::new(Method::Pm, 2), &scaled.d1, &scaled.d2, 0).unwrap();
        let one = null_distribution(&f, &data, ScalingMethod::MeanOne, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        let a = null_distribution(&f, &data, ScalingMethod::MeanOne, 10, 3).unwrap();
        assert_eq!(a, null_distribution(&f, &data, ScalingMethod::MeanOne, 10, 3).unwrap());
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identical_conditions_give_tiny_null() {
        // with r huge and no noise, both conditions observe the same points
        let p = ModelParams { p: 2, q: 1, r: 1e9, a: 0.0, k: 2, n: 12 };
        let data = simgen::gen_dirichlet(&p, 2).unwrap();
        let scaled = ScaledPair::new(&data.deltas[0], &data.deltas[1], ScalingMethod::MeanOne).unwrap();
        let f = pipelines::fit(&MatcherSpec::new(Method::Jofc, 2), &scaled.d1, &scaled.d2, 0).unwrap();
        let null = null_distribution(&f, &data, ScalingMethod::MeanOne, 21, 4).unwrap();
        assert!(null[10] < 0.05, "median {}", null[10]);
    }

    #[test]
    fn unsorted_alpha_rejected() {
        let mut c = cfg(0.1);
        c.alphas = vec![0.2, 0.1];
        assert!(c.validate().is_err());
    }
}
