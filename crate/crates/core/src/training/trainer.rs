//! Mini-batch Adam with early stopping on the validation loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{Modality, MultimodalModel};

use super::{gradient, loss_all, Adam, LossConfig, Mode, TrainConfig, TrainData};

/// Fraction of floored log-evaluations per epoch above which a warning is logged.
pub const CLAMP_WARN_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// `"joint"` or the name of the modality trained in isolation.
    pub scope: String,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub clamp_rate: f64,
    pub reliabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub scope: String,
    pub initial_val_loss: f64,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub records: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub mode: Mode,
    pub runs: Vec<RunLog>,
}

impl TrainLog {
    /// One JSON object per epoch record, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in self.runs.iter().flat_map(|r| &r.records) {
            out.push_str(&serde_json::to_string(rec).expect("epoch record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn n_epochs(&self) -> usize {
        self.runs.iter().map(|r| r.records.len()).sum()
    }
}

/// Trains `model` from its current parameters. Modes `B` and `B+R` fit each
/// modality independently with only its unimodal loss; `B+R+F` fits the full
/// objective jointly.
pub fn train(
    mut model: MultimodalModel,
    train_data: &TrainData,
    val_data: &TrainData,
    tcfg: &TrainConfig,
    lcfg: &LossConfig,
) -> Result<(MultimodalModel, TrainLog)> {
    tcfg.validate()?;
    lcfg.validate(model.n_modalities())?;
    model.validate()?;
    train_data.validate()?;
    val_data.validate()?;
    if train_data.n() == 0 || val_data.n() == 0 {
        return Err(Error::Split("training and validation parts must be nonempty".into()));
    }
    let mut runs = Vec::new();
    match tcfg.mode {
        Mode::Fusion => {
            model.reliab_frozen = false;
            runs.push(fit_scope("joint", &mut model, train_data, val_data, tcfg, lcfg)?);
        }
        Mode::Base | Mode::Reliability => {
            model.reliab_frozen = tcfg.mode == Mode::Base;
            for i in 0..model.n_modalities() {
                let mut sub = MultimodalModel {
                    modalities: vec![Modality {
                        name: model.modalities[i].name.clone(),
                        net: model.modalities[i].net.clone(),
                    }],
                    reliab_raw: vec![model.reliab_raw[i]],
                    reliab_frozen: model.reliab_frozen,
                    transform: model.transform,
                };
                let sub_cfg = LossConfig {
                    eta: vec![lcfg.eta[i]],
                    varphi: 0.0,
                    ..lcfg.clone()
                };
                let scope = sub.modalities[0].name.clone();
                let log = fit_scope(
                    &scope,
                    &mut sub,
                    &train_data.single_modality(i),
                    &val_data.single_modality(i),
                    tcfg,
                    &sub_cfg,
                )?;
                model.modalities[i].net = sub.modalities.pop().expect("one modality").net;
                model.reliab_raw[i] = sub.reliab_raw[0];
                runs.push(log);
            }
        }
    }
    Ok((model, TrainLog { mode: tcfg.mode, runs }))
}

fn param_norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn fit_scope(
    scope: &str,
    model: &mut MultimodalModel,
    train_data: &TrainData,
    val_data: &TrainData,
    tcfg: &TrainConfig,
    lcfg: &LossConfig,
) -> Result<RunLog> {
    let val_rows: Vec<usize> = (0..val_data.n()).collect();
    let mut rows: Vec<usize> = (0..train_data.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut params = model.params();
    let mut opt = Adam::new(params.len(), tcfg.learning_rate, tcfg.adam_beta1, tcfg.adam_beta2, tcfg.adam_eps);

    let initial_val_loss = loss_all(model, val_data, &val_rows, lcfg)?.loss;
    if !initial_val_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: 0, batch: 0, param_norm: param_norm(&params) });
    }
    let mut best = (0, initial_val_loss, params.clone());
    let mut stale = 0;
    let mut records = Vec::new();

    for epoch in 1..=tcfg.max_epochs {
        rows.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut clamped = 0;
        let mut evaluations = 0;
        for (b, batch) in rows.chunks(tcfg.batch_size).enumerate() {
            let (bl, grad) = gradient(model, train_data, batch, lcfg)?;
            let flat = grad.flatten();
            if !bl.loss.is_finite() || flat.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch: b, param_norm: param_norm(&params) });
            }
            loss_sum += bl.loss * batch.len() as f64;
            clamped += bl.clamped;
            evaluations += bl.evaluations;
            opt.step(&mut params, &flat);
            model.set_params(&params);
        }
        let val = loss_all(model, val_data, &val_rows, lcfg)?;
        if !val.loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0, param_norm: param_norm(&params) });
        }
        let clamp_rate = if evaluations > 0 { clamped as f64 / evaluations as f64 } else { 0.0 };
        if clamp_rate > CLAMP_WARN_RATE {
            log::warn!("{scope}: epoch {epoch} floored {:.1}% of log terms", 100.0 * clamp_rate);
        }
        records.push(EpochRecord {
            scope: scope.to_string(),
            epoch,
            train_loss: loss_sum / train_data.n() as f64,
            val_loss: val.loss,
            clamp_rate,
            reliabilities: model.reliabilities(),
        });
        if val.loss < best.1 {
            best = (epoch, val.loss, params.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= tcfg.patience {
                break;
            }
        }
    }
    model.set_params(&best.2);
    Ok(RunLog {
        scope: scope.to_string(),
        initial_val_loss,
        best_epoch: best.0,
        best_val_loss: best.1,
        records,
    })
}
