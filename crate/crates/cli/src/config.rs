//! Experiment configs: versioned JSON, unknown keys rejected.

use std::path::{Path, PathBuf};

use acl_core::{BoundName, CoefficientSpec, EmpiricalMode, LawSpec, LcdOptions, MarginOptions};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Where a report goes when the command line does not say.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// Exact when the law is discrete and the support fits, Monte Carlo otherwise.
    #[default]
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub schema: u32,
    pub law: LawSpec,
    pub coeffs: CoefficientSpec,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub method: EstimateMethod,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginConfig {
    pub schema: u32,
    pub coeffs: CoefficientSpec,
    #[serde(rename = "D")]
    pub radii: Vec<f64>,
    /// Adds the `dist < gamma |t . a|` constraint.
    pub gamma: Option<f64>,
    #[serde(default)]
    pub search: MarginOptions,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LcdConfig {
    pub schema: u32,
    pub coeffs: CoefficientSpec,
    pub gamma: f64,
    pub alpha: f64,
    pub scan_radius: f64,
    #[serde(default)]
    pub search: LcdOptions,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn all_bounds() -> Vec<BoundName> {
    BoundName::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub schema: u32,
    pub law: LawSpec,
    pub coeffs: CoefficientSpec,
    #[serde(default = "all_bounds")]
    pub bounds: Vec<BoundName>,
    #[serde(rename = "D")]
    pub radius_d: Option<f64>,
    pub tau: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub empirical: EmpiricalMode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub margin: MarginOptions,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    Ones,
    Arith,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub schema: u32,
    pub law: LawSpec,
    pub family: FamilySpec,
    pub ns: Vec<usize>,
    pub lambda: f64,
    pub seed: Option<u64>,
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A parsed config together with its hash.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub hash: String,
}

/// Fields every config carries.
pub trait Common {
    fn schema(&self) -> u32;
    fn seed_mut(&mut self) -> &mut Option<u64>;
    fn policy(&self) -> Option<&Path>;
    fn output(&self) -> &OutputSpec;
}

macro_rules! common {
    ($($t:ty),*) => {$(
        impl Common for $t {
            fn schema(&self) -> u32 {
                self.schema
            }
            fn seed_mut(&mut self) -> &mut Option<u64> {
                &mut self.seed
            }
            fn policy(&self) -> Option<&Path> {
                self.policy.as_deref()
            }
            fn output(&self) -> &OutputSpec {
                &self.output
            }
        }
    )*};
}

common!(EstimateConfig, MarginConfig, LcdConfig, BoundsConfig, RatesConfig);

/// Parses `text`, applies a seed override and hashes the result.
///
/// The hash is the SHA-256 of the compact JSON with sorted keys, without the
/// `output` block, so that where a report is written does not change it.
pub fn parse<T: DeserializeOwned + Common>(text: &str, seed: Option<u64>) -> Result<Loaded<T>, CliError> {
    let mut config: T = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!("line {} column {}: {}", e.line(), e.column(), strip_position(&e)))
    })?;
    if config.schema() != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema {}; this build reads schema {SCHEMA_VERSION}",
            config.schema()
        )));
    }
    let mut value: Value = serde_json::from_str(text).expect("already parsed");
    let obj = value.as_object_mut().expect("configs are objects");
    obj.remove("output");
    if let Some(s) = seed {
        *config.seed_mut() = Some(s);
        obj.insert("seed".into(), Value::from(s));
    }
    Ok(Loaded { config, hash: hash_value(&value) })
}

pub fn hash_value(value: &Value) -> String {
    let canonical = serde_json::to_string(value).expect("json serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ESTIMATE: &str = r#"{
        "schema": 1,
        "law": {"kind": "rademacher"},
        "coeffs": {"kind": "ones", "n": 4},
        "lambdas": [0.5]
    }"#;

    #[test]
    fn parses_and_hashes() {
        let a = parse::<EstimateConfig>(ESTIMATE, None).unwrap();
        assert_eq!(a.config.method, EstimateMethod::Auto);
        assert_eq!(a.config.samples, DEFAULT_SAMPLES);
        assert_eq!(a.hash.len(), 64);
        let reordered = r#"{"lambdas": [0.5], "coeffs": {"n": 4, "kind": "ones"}, "law": {"kind": "rademacher"},
            "schema": 1, "output": {"format": "json"}}"#;
        assert_eq!(parse::<EstimateConfig>(reordered, None).unwrap().hash, a.hash);
        let seeded = parse::<EstimateConfig>(ESTIMATE, Some(3)).unwrap();
        assert_eq!(seeded.config.seed, Some(3));
        assert_ne!(seeded.hash, a.hash);
    }

    #[test]
    fn rejects_unknown_keys_with_position() {
        let bad = ESTIMATE.replace("\"lambdas\"", "\"lambda_grid\": [1], \"lambdas\"");
        match parse::<EstimateConfig>(&bad, None) {
            Err(CliError::Config(msg)) => {
                assert!(msg.starts_with("line 5 "), "{msg}");
                assert!(msg.contains("lambda_grid"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
        let nested = ESTIMATE.replace("\"rademacher\"", "\"rademacher\", \"p\": 0.5");
        assert!(parse::<EstimateConfig>(&nested, None).is_err());
    }

    #[test]
    fn rejects_other_schema_versions() {
        let v2 = ESTIMATE.replace("\"schema\": 1", "\"schema\": 2");
        assert!(matches!(parse::<EstimateConfig>(&v2, None), Err(CliError::Config(_))));
        let missing = ESTIMATE.replace("\"schema\": 1,", "");
        assert!(parse::<EstimateConfig>(&missing, None).is_err());
    }
}
