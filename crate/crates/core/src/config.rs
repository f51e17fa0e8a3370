//! Declarative experiment descriptions (TOML).
//!
//! Every union carries a `kind` discriminator. See `configs/annotated.toml`
//! for a commented example.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::policy::{DictatedCutoffSchedule, DisclosurePolicy, TransferScheme};
use crate::signals::Family;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    #[serde(default = "default_family")]
    pub family: Family,
    pub alpha: f64,
}

fn default_family() -> Family {
    Family::Power
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Mc,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub kind: EngineKind,
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_bins")]
    pub grid_bins: usize,
    #[serde(default = "default_clamp")]
    pub llr_clamp: f64,
}

fn default_replications() -> usize {
    1
}

fn default_bins() -> usize {
    4096
}

fn default_clamp() -> f64 {
    40.0
}

fn default_transfers() -> TransferScheme {
    TransferScheme::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed. TOML integers are signed, so seeds written in a config
    /// file are limited to `0..2^63`; larger seeds can be passed with `--seed`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub distribution: DistributionConfig,
    pub disclosure: DisclosurePolicy,
    #[serde(default = "default_transfers")]
    pub transfers: TransferScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictated_cutoffs: Option<DictatedCutoffSchedule>,
    pub engine: EngineConfig,
}

impl ExperimentConfig {
    /// An exact-engine, full-disclosure, zero-transfer experiment.
    pub fn exact(alpha: f64, horizon: usize) -> Self {
        ExperimentConfig {
            seed: 0,
            output: None,
            distribution: DistributionConfig {
                family: Family::Power,
                alpha,
            },
            disclosure: DisclosurePolicy::Full,
            transfers: TransferScheme::Zero,
            dictated_cutoffs: None,
            engine: EngineConfig {
                kind: EngineKind::Exact,
                horizon,
                replications: 1,
                grid_bins: default_bins(),
                llr_clamp: default_clamp(),
            },
        }
    }

    /// Same primitives on the Monte Carlo engine.
    pub fn mc(alpha: f64, horizon: usize, replications: usize, seed: u64) -> Self {
        let mut c = Self::exact(alpha, horizon);
        c.engine.kind = EngineKind::Mc;
        c.engine.replications = replications;
        c.seed = seed;
        c
    }

    pub fn with_disclosure(mut self, d: DisclosurePolicy) -> Self {
        self.disclosure = d;
        self
    }

    pub fn with_transfers(mut self, t: TransferScheme) -> Self {
        self.transfers = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.distribution.alpha;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config("distribution.alpha", format!("must be finite and > 0, got {a}")));
        }
        let e = &self.engine;
        if e.horizon < 1 {
            return Err(Error::config("engine.horizon", "must be at least 1"));
        }
        if e.kind == EngineKind::Mc && e.replications < 1 {
            return Err(Error::config("engine.replications", "must be at least 1"));
        }
        if !(e.grid_bins >= 256 && e.grid_bins.is_power_of_two()) {
            return Err(Error::config(
                "engine.grid_bins",
                format!("must be a power of two ≥ 256, got {}", e.grid_bins),
            ));
        }
        if !(10.0..=80.0).contains(&e.llr_clamp) {
            return Err(Error::config(
                "engine.llr_clamp",
                format!("must lie in [10, 80], got {}", e.llr_clamp),
            ));
        }
        self.disclosure.validate()?;
        self.transfers.validate()?;
        if let Some(d) = &self.dictated_cutoffs {
            d.validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Returns a copy with the dotted `key` set to `value` (parsed as a TOML
    /// value, e.g. `distribution.alpha=1.5`, `disclosure.kind="no_disclosure"`).
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut tree = toml::Value::try_from(self).map_err(|e| Error::config(key, e.to_string()))?;
        let parsed = parse_scalar(value);
        let mut node = &mut tree;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| Error::config(key, format!("`{part}` is not inside a table")))?;
            if i + 1 == parts.len() {
                table.insert((*part).to_string(), parsed.clone());
                break;
            }
            node = table
                .entry((*part).to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
        }
        let cfg: ExperimentConfig = tree
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(key, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_scalar(value: &str) -> toml::Value {
    let v = value.trim();
    if let Ok(i) = v.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = v.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = v.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(v.trim_matches('"').to_string())
}
