//! Subcommand implementations. Every artifact records the resolved config,
//! its hash and the master seed; nothing depends on the worker count.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use mmatch::dissim::{self, DissimilarityMatrix};
use mmatch::exec::Executor;
use mmatch::harness::{self, stats, DiagnoseConfig, PowerConfig, RankConfig};
use mmatch::io::{self, fmt_f64};
use mmatch::pipelines::{self, MatcherSpec};
use mmatch::seed::{self, tag};
use mmatch::simgen;

use crate::config::{self, *};
use crate::{CliError, Common, MatrixInputs};

struct Resolved<T> {
    cfg: T,
    seed: u64,
    hash: String,
}

fn load<T: DeserializeOwned + Serialize>(common: &Common, command: &str, cfg_seed: impl Fn(&T) -> Option<u64>) -> Result<Resolved<T>, CliError> {
    let preset = common.preset.as_deref().map(|p| config::preset(p, command)).transpose()?;
    let file = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let cfg: T = config::resolve(preset, file.as_deref()).map_err(|e| match (&e, preset, &file) {
        (CliError::Config(msg), None, None) => CliError::Config(format!("{msg} (no --config or --preset given)")),
        _ => e,
    })?;
    let seed = match (common.seed, cfg_seed(&cfg)) {
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => match std::env::var("MM_SEED") {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("MM_SEED {v:?} is not an unsigned integer")))?,
            Err(_) => 0,
        },
    };
    let hash = config::config_hash(&cfg);
    Ok(Resolved { cfg, seed, hash })
}

impl<T: Serialize> Resolved<T> {
    fn header(&self, command: &str) -> Value {
        json!({
            "command": command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config": self.cfg,
            "config_hash": self.hash,
            "seed": self.seed,
        })
    }
}

fn csv_preamble(w: &mut impl Write, hash: &str, seed: u64) -> Result<(), CliError> {
    writeln!(w, "# config_hash={hash} seed={seed}")?;
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut w = io::create(path)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn executor(common: &Common) -> Executor {
    Executor::with_workers(common.workers)
}

fn labels(specs: &[MatcherSpec]) -> Vec<String> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let dup = specs.iter().filter(|t| t.method == s.method).count() > 1;
            if dup {
                format!("{}#{}", s.method.name(), i)
            } else {
                s.method.name().to_string()
            }
        })
        .collect()
}

pub fn simulate(common: &Common) -> Result<(), CliError> {
    let r: Resolved<SimulateConfig> = load(common, "simulate", |c: &SimulateConfig| c.seed)?;
    let data = simgen::generate(r.cfg.model, &r.cfg.params, r.seed)?;
    let out = &common.out;
    let mut files = Vec::new();
    for k in 0..data.k() {
        let name = format!("points_{}.csv", k + 1);
        let mut w = io::create(&out.join(&name))?;
        io::write_rows_csv(&mut w, &data.points[k])?;
        w.flush()?;
        files.push(name);
        let name = format!("delta_{}.csv", k + 1);
        let mut w = io::create(&out.join(&name))?;
        io::write_dissimilarity_csv(&mut w, &data.deltas[k])?;
        w.flush()?;
        files.push(name);
    }
    let mut w = io::create(&out.join("latent.csv"))?;
    io::write_rows_csv(&mut w, &data.latent)?;
    w.flush()?;
    files.push("latent.csv".into());
    let mut manifest = r.header("simulate");
    manifest["dissimilarity"] = json!("euclidean");
    manifest["ambient_dim"] = json!(r.cfg.params.ambient_dim(r.cfg.model));
    manifest["latent_dim"] = json!(r.cfg.params.latent_dim(r.cfg.model));
    manifest["files"] = json!(files);
    write_json(&out.join("manifest.json"), &manifest)
}

pub fn power(common: &Common) -> Result<(), CliError> {
    let r: Resolved<PowerCommandConfig> = load(common, "power", |c: &PowerCommandConfig| c.seed)?;
    let c = &r.cfg;
    if c.matchers.is_empty() {
        return Err(CliError::Config("at least one matcher is required".into()));
    }
    let pc = PowerConfig {
        model: c.model,
        params: c.params,
        n_mc: c.n_mc,
        s_null: c.s,
        s_alt: c.s_alt.unwrap_or(c.s),
        alphas: c.alphas.clone(),
        scaling: c.scaling,
        null_mode: c.null_mode,
    };
    pc.validate()?;
    let study = harness::power_curves(&c.matchers, &pc, r.seed, &executor(common))?;
    let names = labels(&c.matchers);
    let out = &common.out;

    let mut w = io::create(&out.join("power.csv"))?;
    csv_preamble(&mut w, &r.hash, r.seed)?;
    writeln!(w, "method,alpha,power,std_error")?;
    for (curve, name) in study.curves.iter().zip(&names) {
        for j in 0..curve.alphas.len() {
            writeln!(w, "{name},{},{},{}", fmt_f64(curve.alphas[j]), fmt_f64(curve.power[j]), fmt_f64(curve.std_error[j]))?;
        }
    }
    w.flush()?;

    let mut w = io::create(&out.join("replicates.csv"))?;
    csv_preamble(&mut w, &r.hash, r.seed)?;
    writeln!(w, "replicate,method,alpha,conditional_power,commensurability,mean_fidelity")?;
    for rep in 0..pc.n_mc {
        for (mi, (curve, name)) in study.curves.iter().zip(&names).enumerate() {
            let e = &study.outcomes[rep][mi].errors;
            for (j, &a) in curve.alphas.iter().enumerate() {
                writeln!(
                    w,
                    "{rep},{name},{},{},{},{}",
                    fmt_f64(a),
                    fmt_f64(curve.replicate_power[rep][j]),
                    fmt_f64(e.commensurability_01()),
                    fmt_f64(e.mean_fidelity())
                )?;
            }
        }
    }
    w.flush()?;

    let mut comparisons = Vec::new();
    for (a, na) in names.iter().enumerate() {
        for (b, nb) in names.iter().enumerate() {
            if a == b {
                continue;
            }
            for (j, &alpha) in pc.alphas.iter().enumerate() {
                let col = |i: usize| study.curves[i].replicate_power.iter().map(|p| p[j]).collect::<Vec<_>>();
                if let Ok(t) = stats::paired_t_greater(&col(a), &col(b)) {
                    comparisons.push(json!({"greater": na, "than": nb, "alpha": alpha, "t": finite(t.statistic), "p_value": t.p_value}));
                }
            }
        }
    }
    let mut summary = r.header("power");
    summary["curves"] = study
        .curves
        .iter()
        .zip(&names)
        .map(|(c, n)| json!({"label": n, "method": c.method, "alphas": c.alphas, "power": c.power, "std_error": c.std_error, "n_mc": c.n_mc, "s_null": c.s_null, "s_alt": c.s_alt}))
        .collect();
    summary["paired_tests"] = Value::Array(comparisons);
    write_json(&out.join("summary.json"), &summary)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn rank(common: &Common) -> Result<(), CliError> {
    let r: Resolved<RankCommandConfig> = load(common, "rank", |c: &RankCommandConfig| c.seed)?;
    let c = &r.cfg;
    if c.matchers.is_empty() {
        return Err(CliError::Config("at least one matcher is required".into()));
    }
    let data = simgen::generate(c.model, &c.params, seed::derive(r.seed, tag::DATA))?;
    let rc = RankConfig { z: c.z, ms: c.ms.clone(), trials: c.trials, scaling: c.scaling };
    let results = harness::rank_experiment(&data.deltas[0], &data.deltas[1], &c.matchers, &rc, r.seed, &executor(common))?;
    let names = labels(&c.matchers);
    let out = &common.out;
    let mut w = io::create(&out.join("rank.csv"))?;
    csv_preamble(&mut w, &r.hash, r.seed)?;
    writeln!(w, "trial,m,method,rank,z")?;
    // results are ordered (trial, m, matcher)
    for (i, res) in results.iter().enumerate() {
        writeln!(w, "{},{},{},{},{}", res.trial, res.m, names[i % names.len()], res.rank, res.z)?;
    }
    w.flush()?;
    let mut groups = Vec::new();
    for &m in &c.ms {
        for (mi, name) in names.iter().enumerate() {
            let ranks: Vec<f64> = results
                .iter()
                .enumerate()
                .filter(|(i, x)| x.m == m && i % names.len() == mi)
                .map(|(_, x)| x.rank as f64)
                .collect();
            groups.push(json!({"m": m, "method": name, "mean_rank": stats::mean(&ranks), "trials": ranks.len()}));
        }
    }
    let mut summary = r.header("rank");
    summary["groups"] = Value::Array(groups);
    summary["chance_rank"] = json!(c.z as f64 / 2.0);
    summary["uniform_mean_rank"] = json!((c.z as f64 + 1.0) / 2.0);
    write_json(&out.join("summary.json"), &summary)
}

fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn read_pair(inputs: &MatrixInputs) -> Result<(DissimilarityMatrix, DissimilarityMatrix, Value), CliError> {
    let d1 = io::read_dissimilarity(&inputs.d1)?;
    let d2 = io::read_dissimilarity(&inputs.d2)?;
    let meta = json!({"d1_sha256": digest_file(&inputs.d1)?, "d2_sha256": digest_file(&inputs.d2)?});
    Ok((d1, d2, meta))
}

pub fn test(common: &Common, inputs: &MatrixInputs, u1: &Path, v2: &Path) -> Result<(), CliError> {
    let r: Resolved<TestCommandConfig> = load(common, "test", |c: &TestCommandConfig| c.seed)?;
    let c = &r.cfg;
    let (d1, d2, mut meta) = read_pair(inputs)?;
    let u = io::read_vector(u1)?;
    let v = io::read_vector(v2)?;
    meta["u1_sha256"] = json!(digest_file(u1)?);
    meta["v2_sha256"] = json!(digest_file(v2)?);
    let (scaled, report) = dissim::prescale(&[d1.clone(), d2.clone()], c.scaling)?;
    let f = &report.factor_per_condition;
    let fitted = pipelines::fit(&c.matcher, &scaled[0], &scaled[1], seed::derive(r.seed, tag::FIT))?;
    let u: Vec<f64> = u.iter().map(|x| x / f[0]).collect();
    let v: Vec<f64> = v.iter().map(|x| x / f[1]).collect();
    let (y1, y2) = fitted.embed_test_pair(&u, &v, seed::derive(r.seed, tag::OOS))?;
    let t = pipelines::test_statistic(&y1, &y2)?.0;
    let hold = harness::holdout_experiment(
        &d1,
        &d2,
        &c.matcher,
        c.trials,
        &[0.05],
        c.scaling,
        c.pairing,
        seed::derive(r.seed, tag::HOLDOUT),
        &executor(common),
    )?;
    let p = stats::empirical_p_value(&hold.null, t);
    let mut result = r.header("test");
    result["inputs"] = meta;
    result["matcher_id"] = json!(fitted.id());
    result["statistic"] = json!(t);
    result["p_value"] = json!(p);
    result["null_size"] = json!(hold.null.len());
    result["embedded"] = json!({"y1": y1, "y2": y2});
    write_json(&common.out.join("test.json"), &result)?;
    println!("{}", serde_json::to_string(&json!({"T": t, "p_value": p})).expect("serializable"));
    Ok(())
}

pub fn diagnose(common: &Common) -> Result<(), CliError> {
    let r: Resolved<DiagnoseCommandConfig> = load(common, "diagnose", |c: &DiagnoseCommandConfig| c.seed)?;
    let c = &r.cfg;
    let dc = DiagnoseConfig {
        power: PowerConfig {
            model: c.model,
            params: c.params,
            n_mc: c.n_mc,
            s_null: c.s,
            s_alt: c.s,
            alphas: vec![c.alpha],
            scaling: c.scaling,
            null_mode: Default::default(),
        },
        alpha: c.alpha,
        tail_fraction: c.tail_fraction,
    };
    let d = harness::diagnose(&c.matcher, &dc, r.seed, &executor(common))?;
    let out = &common.out;
    let mut w = io::create(&out.join("diagnose.csv"))?;
    csv_preamble(&mut w, &r.hash, r.seed)?;
    writeln!(w, "replicate,hausdorff,comm_error,cond_power")?;
    for rec in &d.records {
        writeln!(w, "{},{},{},{}", rec.replicate, fmt_f64(rec.hausdorff), fmt_f64(rec.comm_error), fmt_f64(rec.cond_power))?;
    }
    w.flush()?;
    let mut summary = r.header("diagnose");
    summary["correlation"] = finite(d.correlation);
    summary["low_power_mean_hausdorff"] = json!(d.low_power_hausdorff);
    summary["high_power_mean_hausdorff"] = json!(d.high_power_hausdorff);
    summary["tail_test"] = match d.tail_test {
        Some(t) => json!({"t": finite(t.statistic), "p_value": t.p_value}),
        None => Value::Null,
    };
    write_json(&out.join("summary.json"), &summary)
}

pub fn embed(common: &Common, inputs: &MatrixInputs) -> Result<(), CliError> {
    let r: Resolved<EmbedCommandConfig> = load(common, "embed", |c: &EmbedCommandConfig| c.seed)?;
    let c = &r.cfg;
    let (d1, d2, meta) = read_pair(inputs)?;
    let (scaled, report) = dissim::prescale(&[d1, d2], c.scaling)?;
    let fitted = pipelines::fit(&c.matcher, &scaled[0], &scaled[1], seed::derive(r.seed, tag::FIT))?;
    let out = &common.out;
    let mut files = Vec::new();
    for (k, a) in fitted.anchors.iter().enumerate() {
        let name = format!("anchors_{}.csv", k + 1);
        let mut w = io::create(&out.join(&name))?;
        io::write_configuration_csv(&mut w, a)?;
        w.flush()?;
        files.push(name);
    }
    let mut bundle = r.header("embed");
    bundle["inputs"] = meta;
    bundle["scaling"] = json!(report);
    bundle["matcher"] = fitted.summary();
    bundle["files"] = json!(files);
    write_json(&out.join("matcher.json"), &bundle)
}
