//! Run configuration document.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::SplitSpec;
use crate::error::{Error, Result};
use crate::training::{LossConfig, Mode, TrainConfig};

pub const DEFAULT_PROTOTYPES: usize = 30;
pub const DEFAULT_EPSILON_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSettings {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            patience: t.patience,
            max_epochs: t.max_epochs,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSettings {
    pub lambda: f64,
    /// `epsilon = epsilon_scale * y_std` of the transformed training times.
    pub epsilon_scale: f64,
    /// Unimodal loss weight per modality name; unlisted modalities get 1.
    pub eta: IndexMap<String, f64>,
    pub varphi: f64,
}

impl Default for LossSettings {
    fn default() -> Self {
        LossSettings { lambda: 0.5, epsilon_scale: DEFAULT_EPSILON_SCALE, eta: IndexMap::new(), varphi: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema document, relative to the config file.
    pub schema: PathBuf,
    /// Output directory, relative to the config file.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Default prototype count per modality.
    #[serde(default = "default_prototypes")]
    pub prototypes: usize,
    #[serde(default)]
    pub prototypes_per_modality: IndexMap<String, usize>,
    #[serde(default = "default_fractions")]
    pub split_fractions: [f64; 3],
    #[serde(default)]
    pub train: TrainSettings,
    #[serde(default)]
    pub loss: LossSettings,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_mode() -> Mode {
    Mode::Fusion
}

fn default_prototypes() -> usize {
    DEFAULT_PROTOTYPES
}

fn default_fractions() -> [f64; 3] {
    SplitSpec::default().fractions
}

impl RunConfig {
    pub fn new(schema: impl Into<PathBuf>) -> Self {
        toml::from_str::<RunConfig>(&format!("schema = {:?}", schema.into().display().to_string()))
            .expect("defaults parse")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.prototypes == 0 || self.prototypes_per_modality.values().any(|&k| k == 0) {
            return Err(Error::Config("prototype counts must be at least 1".into()));
        }
        self.train_config().validate()?;
        if !(self.loss.epsilon_scale > 0.0) {
            return Err(Error::Config("epsilon_scale must be positive".into()));
        }
        Ok(())
    }

    pub fn prototypes_for(&self, modality: &str) -> usize {
        self.prototypes_per_modality.get(modality).copied().unwrap_or(self.prototypes)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec { fractions: self.split_fractions, seed: self.seed }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            patience: t.patience,
            max_epochs: t.max_epochs,
            seed: self.seed,
            adam_beta1: t.adam_beta1,
            adam_beta2: t.adam_beta2,
            adam_eps: t.adam_eps,
            mode: self.mode,
        }
    }

    pub fn loss_config(&self, modalities: &[&str], y_std: f64) -> Result<LossConfig> {
        if let Some(unknown) = self.loss.eta.keys().find(|k| !modalities.contains(&k.as_str())) {
            return Err(Error::Config(format!("eta given for unknown modality '{unknown}'")));
        }
        let cfg = LossConfig {
            lambda: self.loss.lambda,
            epsilon: self.loss.epsilon_scale * y_std,
            eta: modalities.iter().map(|m| self.loss.eta.get(*m).copied().unwrap_or(1.0)).collect(),
            varphi: self.loss.varphi,
        };
        cfg.validate(modalities.len())?;
        Ok(cfg)
    }

    /// SHA-256 of the configuration with the output directory removed.
    pub fn digest(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::from_toml("schema = \"s.toml\"").unwrap();
        assert_eq!(c.prototypes, 30);
        assert_eq!(c.mode, Mode::Fusion);
        assert_eq!(c.train.learning_rate, 0.05);
        assert_eq!(c.train.batch_size, 512);
        assert_eq!(c.loss.varphi, 0.01);
        assert_eq!(c, RunConfig::new("s.toml"));
        let l = c.loss_config(&["a", "b"], 2.0).unwrap();
        assert_eq!(l.eta, vec![1.0, 1.0]);
        assert!((l.epsilon - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn overrides_and_errors() {
        let text = "schema = \"s.toml\"\nmode = \"B+R\"\n[loss]\neta = { b = 0.5 }\n[prototypes_per_modality]\na = 4\n";
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.mode, Mode::Reliability);
        assert_eq!(c.prototypes_for("a"), 4);
        assert_eq!(c.prototypes_for("b"), 30);
        assert_eq!(c.loss_config(&["a", "b"], 1.0).unwrap().eta, vec![1.0, 0.5]);
        assert!(c.loss_config(&["a"], 1.0).is_err());
        assert!(matches!(RunConfig::from_toml("schema = 1"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("schema = \"s\"\nmode = \"X\"").is_err());
        assert!(RunConfig::from_toml("schema = \"s\"\nprototypes = 0").is_err());
    }

    #[test]
    fn digest_ignores_output_dir() {
        let a = RunConfig::new("s.toml");
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.digest(), b.digest());
        b.seed = 3;
        assert_ne!(a.digest(), b.digest());
    }
}
