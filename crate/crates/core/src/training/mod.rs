//! Loss functions, gradients and the optimization loop.

mod adam;
mod gradient;
mod loss;
mod trainer;

pub use adam::Adam;
pub use gradient::{gradient, Gradient};
pub use loss::{loss_all, loss_interval, loss_interval_grad, target_interval, BatchLoss, LossGrad, LossValue, LN_FLOOR};
pub use trainer::{train, EpochRecord, RunLog, TrainLog, CLAMP_WARN_RATE};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// Weight of the belief term; `1 - lambda` weights plausibility.
    pub lambda: f64,
    /// Half-width of the interval asserted by an observed event.
    pub epsilon: f64,
    /// Per-modality weights of the unimodal losses.
    pub eta: Vec<f64>,
    /// Weight of the fused loss.
    pub varphi: f64,
}

/// One transformed survival observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub y: f64,
    /// `true` when the event was observed, `false` when right-censored.
    pub event: bool,
}

/// Per-modality feature rows aligned with observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    /// `features[i][row]` is the feature vector of modality `i`.
    pub features: Vec<Vec<Vec<f64>>>,
    pub obs: Vec<Observation>,
}

impl TrainData {
    pub fn n(&self) -> usize {
        self.obs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.iter().any(|m| m.len() != self.obs.len()) {
            return Err(Error::Data("feature rows and observations differ in length".into()));
        }
        Ok(())
    }

    pub(crate) fn single_modality(&self, i: usize) -> TrainData {
        TrainData {
            features: vec![self.features[i].clone()],
            obs: self.obs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Each modality trained alone with reliability fixed at 1.
    #[serde(rename = "B")]
    Base,
    /// Each modality trained alone with a learned reliability.
    #[serde(rename = "B+R")]
    Reliability,
    /// Joint training with reliabilities and the fused loss.
    #[serde(rename = "B+R+F")]
    Fusion,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Base, Mode::Reliability, Mode::Fusion];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Base => "B",
            Mode::Reliability => "B+R",
            Mode::Fusion => "B+R+F",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode '{s}' (expected B, B+R or B+R+F)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub mode: Mode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            batch_size: 512,
            patience: 20,
            max_epochs: 500,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            mode: Mode::Fusion,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.learning_rate) || !positive(self.adam_eps) {
            return Err(Error::Config("learning rate and adam eps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Config("adam betas must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and max epochs must be positive".into()));
        }
        Ok(())
    }
}
