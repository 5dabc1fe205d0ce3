//! Per-command configuration schemas, presets and resolution.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mmatch::dissim::ScalingMethod;
use mmatch::harness::{HoldoutPairing, NullMode};
use mmatch::pipelines::{MatcherSpec, Method};
use mmatch::simgen::{Model, ModelParams};

use crate::CliError;

fn default_scaling() -> ScalingMethod {
    ScalingMethod::MeanOne
}

fn default_alphas() -> Vec<f64> {
    vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.5]
}

fn default_matchers() -> Vec<MatcherSpec> {
    Method::ALL.iter().map(|&m| MatcherSpec::new(m, 2)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Model,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerCommandConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Model,
    pub params: ModelParams,
    pub n_mc: usize,
    /// Null pairs per replicate; also the alternative count unless `s_alt` is set.
    pub s: usize,
    #[serde(default)]
    pub s_alt: Option<usize>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMethod,
    #[serde(default)]
    pub null_mode: NullMode,
    #[serde(default = "default_matchers")]
    pub matchers: Vec<MatcherSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankCommandConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Model,
    /// `params.n` objects are generated; `z` of them are held out per trial.
    pub params: ModelParams,
    pub z: usize,
    pub ms: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMethod,
    #[serde(default = "default_matchers")]
    pub matchers: Vec<MatcherSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCommandConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub matcher: MatcherSpec,
    /// Hold-out trials used to estimate the null distribution.
    pub trials: usize,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMethod,
    #[serde(default)]
    pub pairing: HoldoutPairing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseCommandConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Model,
    pub params: ModelParams,
    pub n_mc: usize,
    pub s: usize,
    pub alpha: f64,
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMethod,
    #[serde(default = "default_pm")]
    pub matcher: MatcherSpec,
}

fn default_tail() -> f64 {
    0.1
}

fn default_pm() -> MatcherSpec {
    MatcherSpec::new(Method::Pm, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedCommandConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub matcher: MatcherSpec,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingMethod,
}

pub const FIG5: &str = r#"
model = "dirichlet"
n_mc = 100
s = 200
alphas = [0.05, 0.1, 0.2]
params = { p = 3, q = 3, r = 100.0, a = 0.1, k = 2, n = 50 }
matchers = [
    { method = "pm", m = 2 },
    { method = "cca", m = 2 },
    { method = "jofc", m = 2, policy = { off_diagonal = { kind = "mean" } } },
]
"#;

pub const FIG7: &str = r#"
model = "gaussian"
n_mc = 100
s = 200
alphas = [0.05, 0.1, 0.2]
params = { p = 3, q = 3, r = 100.0, a = 0.1, k = 2, n = 50 }
matchers = [
    { method = "pm", m = 2 },
    { method = "cca", m = 2 },
    { method = "jofc", m = 2, policy = { off_diagonal = { kind = "mean" } } },
]
"#;

pub const FIG8: &str = r#"
model = "dirichlet"
n_mc = 100
s = 200
alpha = 0.05
params = { p = 3, q = 3, r = 100.0, a = 0.1, k = 2, n = 50 }
matcher = { method = "pm", m = 2 }
"#;

pub const RANKING: &str = r#"
model = "dirichlet"
z = 200
ms = [5, 10]
trials = 50
params = { p = 20, q = 20, r = 100.0, a = 0.1, k = 2, n = 300 }
matchers = [{ method = "pm" }, { method = "jofc" }]
"#;

/// Preset text for `name`, checked against the command it is used with.
pub fn preset(name: &str, command: &str) -> Result<&'static str, CliError> {
    let (text, cmd) = match name {
        "fig5" => (FIG5, "power"),
        "fig7" => (FIG7, "power"),
        "fig8" => (FIG8, "diagnose"),
        "ranking" => (RANKING, "rank"),
        other => return Err(CliError::Config(format!("unknown preset {other:?}"))),
    };
    if cmd != command {
        return Err(CliError::Config(format!("preset {name:?} belongs to `{cmd}`, not `{command}`")));
    }
    Ok(text)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse the optional preset and the optional config file (file values win),
/// then check the result against the command schema.
pub fn resolve<T: DeserializeOwned>(preset_text: Option<&str>, file_text: Option<&str>) -> Result<T, CliError> {
    let parse = |s: &str, what: &str| -> Result<toml::Table, CliError> {
        s.parse::<toml::Table>().map_err(|e| CliError::Config(format!("{what}: {e}")))
    };
    let mut table = match preset_text {
        Some(p) => parse(p, "preset")?,
        None => toml::Table::new(),
    };
    if let Some(f) = file_text {
        merge(&mut table, parse(f, "config file")?);
    }
    T::deserialize(toml::Value::Table(table)).map_err(|e| CliError::Config(e.to_string()))
}

/// Hex digest of the canonical JSON rendering of a resolved config.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
