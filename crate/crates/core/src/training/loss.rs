//! Censoring-aware Bel/Pl losses.

use crate::error::{Error, Result};
use crate::fusion::MultimodalModel;
use crate::grfn::{bel_pl, bel_pl_grad, Grfn, RealInterval};

use super::{LossConfig, Observation, TrainData};

/// Floor applied to Bel and Pl before taking logarithms.
pub const LN_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    /// Whether a floored logarithm with nonzero weight was hit.
    pub clamped: bool,
}

/// Loss value with its partial derivatives with respect to `(mu, sigma2, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossGrad {
    pub value: LossValue,
    pub d: [f64; 3],
}

impl LossConfig {
    pub fn validate(&self, n_modalities: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.eta.len() != n_modalities {
            return Err(Error::Config(format!(
                "{} eta weights for {} modalities",
                self.eta.len(),
                n_modalities
            )));
        }
        if self.eta.iter().chain([&self.varphi]).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("eta and varphi must be non-negative".into()));
        }
        Ok(())
    }
}

/// The interval an observation asserts: `[y - eps, y + eps]` for an event,
/// `[y, inf)` for a right-censored time.
pub fn target_interval(obs: &Observation, epsilon: f64) -> RealInterval {
    if obs.event {
        RealInterval::around(obs.y, epsilon)
    } else {
        RealInterval::at_least(obs.y)
    }
}

fn floored_terms(lambda: f64, bel: f64, pl: f64) -> (f64, bool, bool) {
    let bel_clamped = lambda > 0.0 && bel < LN_FLOOR;
    let pl_clamped = lambda < 1.0 && pl < LN_FLOOR;
    let mut loss = 0.0;
    if lambda > 0.0 {
        loss -= lambda * bel.max(LN_FLOOR).ln();
    }
    if lambda < 1.0 {
        loss -= (1.0 - lambda) * pl.max(LN_FLOOR).ln();
    }
    (loss, bel_clamped, pl_clamped)
}

pub fn loss_interval(g: &Grfn, obs: &Observation, cfg: &LossConfig) -> LossValue {
    let (bel, pl) = bel_pl(g, &target_interval(obs, cfg.epsilon));
    let (loss, cb, cp) = floored_terms(cfg.lambda, bel, pl);
    LossValue { loss, clamped: cb || cp }
}

pub fn loss_interval_grad(g: &Grfn, obs: &Observation, cfg: &LossConfig) -> LossGrad {
    let bp = bel_pl_grad(g, &target_interval(obs, cfg.epsilon));
    let (loss, cb, cp) = floored_terms(cfg.lambda, bp.bel, bp.pl);
    let mut d = [0.0; 3];
    for j in 0..3 {
        if cfg.lambda > 0.0 && !cb {
            d[j] -= cfg.lambda * bp.d_bel[j] / bp.bel;
        }
        if cfg.lambda < 1.0 && !cp {
            d[j] -= (1.0 - cfg.lambda) * bp.d_pl[j] / bp.pl;
        }
    }
    LossGrad {
        value: LossValue { loss, clamped: cb || cp },
        d,
    }
}

/// Summary of a loss evaluation over a set of rows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLoss {
    /// Mean over rows of the weighted per-row loss.
    pub loss: f64,
    pub clamped: usize,
    pub evaluations: usize,
}

/// Per-row objective: weighted unimodal losses on the discounted GRFNs plus
/// the weighted loss of the fused GRFN.
pub fn loss_all(mm: &MultimodalModel, data: &TrainData, rows: &[usize], cfg: &LossConfig) -> Result<BatchLoss> {
    if rows.is_empty() {
        return Err(Error::domain("loss over an empty batch"));
    }
    let mut out = BatchLoss::default();
    let mut xs: Vec<&[f64]> = Vec::with_capacity(mm.n_modalities());
    for &row in rows {
        xs.clear();
        xs.extend(data.features.iter().map(|m| m[row].as_slice()));
        let fo = mm.fuse(&xs)?;
        let obs = &data.obs[row];
        let mut total = 0.0;
        for (g, &eta) in fo.discounted.iter().zip(&cfg.eta) {
            if eta > 0.0 {
                let v = loss_interval(g, obs, cfg);
                total += eta * v.loss;
                out.evaluations += 1;
                out.clamped += v.clamped as usize;
            }
        }
        if cfg.varphi > 0.0 {
            let v = loss_interval(&fo.fused, obs, cfg);
            total += cfg.varphi * v.loss;
            out.evaluations += 1;
            out.clamped += v.clamped as usize;
        }
        out.loss += total;
    }
    out.loss /= rows.len() as f64;
    Ok(out)
}
