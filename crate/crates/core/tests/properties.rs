use rand::Rng;
use rand_distr::StandardNormal;

use mmatch::align::{self, Ridge};
use mmatch::dissim::ScalingMethod;
use mmatch::exec::Executor;
use mmatch::harness::{self, stats, HoldoutPairing, NullMode, PowerConfig};
use mmatch::linalg::{self, Matrix};
use mmatch::pipelines::{MatcherSpec, Method};
use mmatch::seed;
use mmatch::simgen::{self, Hypothesis, Model, ModelParams};

fn gauss(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut r = seed::rng(seed);
    Matrix::from_fn(rows, cols, |_, _| r.sample::<f64, _>(StandardNormal))
}

#[test]
fn cca_finds_spurious_correlation_in_pure_noise() {
    let runs = 40;
    let hits = (0..runs)
        .filter(|&s| {
            let x1 = gauss(seed::derive(77, s), 50, 45);
            let x2 = gauss(seed::derive(78, s), 50, 45);
            align::cca_fit(&x1, &x2, 2, Ridge::Auto).unwrap().correlations[0] > 0.9
        })
        .count();
    assert!(hits * 10 >= runs as usize * 9, "{hits} of {runs}");
}

#[test]
fn matched_signal_blocks_are_closer() {
    let params = ModelParams { p: 3, q: 3, r: 100.0, a: 0.1, k: 2, n: 30 };
    let data = simgen::generate(Model::Dirichlet, &params, 5).unwrap();
    let sig = |y: &[f64]| y[..params.p + 1].to_vec();
    let dist = |h| -> Vec<f64> {
        (0..500u64)
            .map(|j| {
                let t = simgen::gen_test_pair(&data, h, seed::derive(9, j)).unwrap();
                linalg::euclidean(&sig(&t.y1), &sig(&t.y2))
            })
            .collect()
    };
    let (matched, unmatched) = (dist(Hypothesis::Matched), dist(Hypothesis::Unmatched));
    assert!(stats::mean(&matched) < stats::mean(&unmatched));
    assert!(stats::rank_sum_less(&matched, &unmatched).unwrap().p_value < 1e-6);
}

#[test]
fn generated_prefix_is_stable() {
    let params = ModelParams { p: 2, q: 4, r: 30.0, a: 0.3, k: 3, n: 12 };
    for model in [Model::Dirichlet, Model::Gaussian] {
        let small = simgen::generate(model, &params.with_n(5), 2).unwrap();
        let big = simgen::generate(model, &params, 2).unwrap();
        assert_eq!(small.points[2][..], big.points[2][..5]);
        assert_eq!(big.points[0][0].len(), params.ambient_dim(model));
    }
}

fn small_power(null_mode: NullMode) -> PowerConfig {
    PowerConfig {
        model: Model::Dirichlet,
        params: ModelParams { p: 3, q: 3, r: 100.0, a: 0.1, k: 2, n: 14 },
        n_mc: 4,
        s_null: 30,
        s_alt: 30,
        alphas: vec![0.05, 0.2, 0.5],
        scaling: ScalingMethod::MeanOne,
        null_mode,
    }
}

#[test]
fn power_curves_are_monotone_and_reproducible() {
    let specs: Vec<MatcherSpec> = Method::ALL.iter().map(|&m| MatcherSpec::new(m, 2)).collect();
    for mode in [NullMode::PerReplicate, NullMode::Pooled] {
        let cfg = small_power(mode);
        let a = harness::power_curves(&specs, &cfg, 3, &Executor::sequential()).unwrap();
        let b = harness::power_curves(&specs, &cfg, 3, &Executor::with_workers(2)).unwrap();
        assert_eq!(a.curves, b.curves);
        for c in &a.curves {
            assert!(c.power.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!(c.power.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(c.replicate_power.len(), cfg.n_mc);
        }
    }
}

#[test]
fn strong_signal_gives_high_power() {
    let mut cfg = small_power(NullMode::PerReplicate);
    cfg.params.a = 0.0;
    cfg.params.r = 1000.0;
    let study = harness::power_curves(&[MatcherSpec::new(Method::Jofc, 2)], &cfg, 1, &Executor::sequential()).unwrap();
    assert!(study.curves[0].power[1] > 0.5, "{:?}", study.curves[0].power);
}

#[test]
fn holdout_null_and_alternative_sizes() {
    let data = simgen::generate(Model::Dirichlet, &ModelParams { p: 3, q: 3, r: 100.0, a: 0.1, k: 2, n: 12 }, 8).unwrap();
    let spec = MatcherSpec::new(Method::Pm, 2);
    for pairing in [HoldoutPairing::BothCrossings, HoldoutPairing::SingleCrossing] {
        let r = harness::holdout_experiment(
            &data.deltas[0],
            &data.deltas[1],
            &spec,
            3,
            &[0.1, 0.5],
            ScalingMethod::MeanOne,
            pairing,
            4,
            &Executor::sequential(),
        )
        .unwrap();
        assert!(!r.null.is_empty() && !r.alt.is_empty());
        assert!(r.curve.power.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

#[test]
fn zhu_ghodsi_finds_elbow_in_classical_scree() {
    let x = gauss(4, 40, 3) * 5.0;
    let noise = gauss(6, 40, 8) * 0.05;
    let full = Matrix::from_fn(40, 11, |i, j| if j < 3 { x[(i, j)] } else { noise[(i, j - 3)] });
    let fit = mmatch::mds::classical_fit(&linalg::pairwise_distances(&full), 10).unwrap();
    let q = harness::zhu_ghodsi_dimension(&fit.eigenvalues).unwrap();
    assert_eq!(q, 3);
}
