//! Reverse-mode chain rule through the prototype layer, discounting and fusion.

use crate::ennreg::{ForwardTrace, UnimodalModel};
use crate::error::{Error, Result};
use crate::fusion::MultimodalModel;
use crate::grfn::{combine_unchecked, Grfn};
use crate::special::logistic;

use super::loss::{loss_interval_grad, BatchLoss};
use super::{LossConfig, TrainData};

/// Partial derivatives of the batch loss, laid out like the model: each
/// field holds the derivative with respect to the parameter of the same name.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub modalities: Vec<UnimodalModel>,
    pub reliab_raw: Vec<f64>,
}

impl Gradient {
    fn zeros_like(mm: &MultimodalModel) -> Self {
        let modalities = mm
            .modalities
            .iter()
            .map(|m| {
                let k = m.net.n_prototypes();
                let d = m.net.dim();
                UnimodalModel {
                    prototypes: vec![vec![0.0; d]; k],
                    gammas: vec![0.0; k],
                    betas: vec![vec![0.0; d]; k],
                    beta0s: vec![0.0; k],
                    raw_sigma2s: vec![0.0; k],
                    raw_hs: vec![0.0; k],
                }
            })
            .collect();
        Gradient {
            modalities,
            reliab_raw: vec![0.0; mm.n_modalities()],
        }
    }

    fn scale(&mut self, c: f64) {
        for m in &mut self.modalities {
            for v in m.prototypes.iter_mut().chain(m.betas.iter_mut()).flatten() {
                *v *= c;
            }
            for v in m.gammas.iter_mut().chain(&mut m.beta0s).chain(&mut m.raw_sigma2s).chain(&mut m.raw_hs) {
                *v *= c;
            }
        }
        self.reliab_raw.iter_mut().for_each(|v| *v *= c);
    }

    /// Flattened in the order of [`MultimodalModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in &self.modalities {
            m.write_params(&mut out);
        }
        out.extend_from_slice(&self.reliab_raw);
        out
    }
}

/// Backpropagates `d = dL/d(mu, sigma2, h)` of a `⊞` output into its inputs.
/// Returns per-input derivatives with respect to `(mu_k, sigma2_k, w_k)`
/// where `w_k` is the weighted precision.
fn combine_backward(mus: &[f64], sigma2s: &[f64], ws: &[f64], out: &Grfn, d: [f64; 3], acc: &mut Vec<[f64; 3]>) {
    acc.clear();
    let total: f64 = ws.iter().sum();
    if total == 0.0 {
        // vacuous output: only the unweighted mean depends on the inputs
        let n = mus.len() as f64;
        acc.extend(mus.iter().map(|_| [d[0] / n, 0.0, d[2]]));
        return;
    }
    let inv = 1.0 / total;
    for k in 0..mus.len() {
        let w = ws[k];
        let d_mu = d[0] * w * inv;
        let d_s2 = d[1] * w * w * inv * inv;
        let d_w = d[0] * (mus[k] - out.mu) * inv
            + d[1] * (2.0 * w * sigma2s[k] * inv * inv - 2.0 * out.sigma2 * inv)
            + d[2];
        acc.push([d_mu, d_s2, d_w]);
    }
}

/// Accumulates `dL/d(output GRFN)` of one modality into its parameters.
fn unimodal_backward(net: &UnimodalModel, x: &[f64], tr: &ForwardTrace, d: [f64; 3], grad: &mut UnimodalModel, scratch: &mut Vec<[f64; 3]>) {
    let ws: Vec<f64> = tr.activations.iter().zip(&tr.hs).map(|(s, h)| s * h).collect();
    combine_backward(&tr.mus, &tr.sigma2s, &ws, &tr.output, d, scratch);
    for (k, &[d_mu, d_s2, d_w]) in scratch.iter().enumerate() {
        let s = tr.activations[k];
        let h = tr.hs[k];
        // mu_k = beta_k . x + beta0_k
        for (gb, xi) in grad.betas[k].iter_mut().zip(x) {
            *gb += d_mu * xi;
        }
        grad.beta0s[k] += d_mu;
        // sigma2_k = softplus(raw), h_k = softplus(raw)
        grad.raw_sigma2s[k] += d_s2 * logistic(net.raw_sigma2s[k]);
        grad.raw_hs[k] += d_w * s * logistic(net.raw_hs[k]);
        // s_k = exp(-gamma^2 |x - p|^2)
        let d_s = d_w * h;
        if d_s != 0.0 && s != 0.0 {
            let gamma = net.gammas[k];
            let p = &net.prototypes[k];
            let dist2: f64 = x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            grad.gammas[k] += d_s * (-2.0 * gamma * dist2 * s);
            let coef = d_s * 2.0 * gamma * gamma * s;
            for ((gp, xi), pi) in grad.prototypes[k].iter_mut().zip(x).zip(p) {
                *gp += coef * (xi - pi);
            }
        }
    }
}

/// Batch loss and its exact gradient with respect to every trainable parameter.
pub fn gradient(mm: &MultimodalModel, data: &TrainData, rows: &[usize], cfg: &LossConfig) -> Result<(BatchLoss, Gradient)> {
    if rows.is_empty() {
        return Err(Error::domain("gradient over an empty batch"));
    }
    let t = mm.n_modalities();
    let mut grad = Gradient::zeros_like(mm);
    let mut loss = BatchLoss::default();
    let reliab = mm.reliabilities();
    let mut traces: Vec<ForwardTrace> = Vec::with_capacity(t);
    let mut discounted: Vec<Grfn> = Vec::with_capacity(t);
    let mut d_disc: Vec<[f64; 3]> = vec![[0.0; 3]; t];
    let mut scratch = Vec::new();
    let mut sigma2s = vec![0.0; t];
    let mut ws = vec![0.0; t];
    let mut mus = vec![0.0; t];
    let ones = vec![1.0; t];

    for &row in rows {
        traces.clear();
        discounted.clear();
        for (i, m) in mm.modalities.iter().enumerate() {
            let tr = m.net.trace(&data.features[i][row])?;
            discounted.push(Grfn { h: reliab[i] * tr.output.h, ..tr.output });
            traces.push(tr);
        }
        let obs = &data.obs[row];
        let mut total = 0.0;
        d_disc.iter_mut().for_each(|d| *d = [0.0; 3]);

        for i in 0..t {
            let eta = cfg.eta[i];
            if eta > 0.0 {
                let lg = loss_interval_grad(&discounted[i], obs, cfg);
                total += eta * lg.value.loss;
                loss.evaluations += 1;
                loss.clamped += lg.value.clamped as usize;
                for j in 0..3 {
                    d_disc[i][j] += eta * lg.d[j];
                }
            }
        }
        if cfg.varphi > 0.0 {
            let fused = combine_unchecked(&discounted, &ones);
            let lg = loss_interval_grad(&fused, obs, cfg);
            total += cfg.varphi * lg.value.loss;
            loss.evaluations += 1;
            loss.clamped += lg.value.clamped as usize;
            for i in 0..t {
                mus[i] = discounted[i].mu;
                sigma2s[i] = discounted[i].sigma2;
                ws[i] = discounted[i].h;
            }
            let d_f = lg.d.map(|v| cfg.varphi * v);
            combine_backward(&mus, &sigma2s, &ws, &fused, d_f, &mut scratch);
            for i in 0..t {
                for j in 0..3 {
                    d_disc[i][j] += scratch[i][j];
                }
            }
        }
        loss.loss += total;

        for i in 0..t {
            let [d_mu, d_s2, d_hd] = d_disc[i];
            let h = traces[i].output.h;
            if !mm.reliab_frozen {
                let r = reliab[i];
                grad.reliab_raw[i] += d_hd * h * r * (1.0 - r);
            }
            let d_out = [d_mu, d_s2, d_hd * reliab[i]];
            if d_out != [0.0; 3] {
                unimodal_backward(&mm.modalities[i].net, &data.features[i][row], &traces[i], d_out, &mut grad.modalities[i], &mut scratch);
            }
        }
    }

    let n = rows.len() as f64;
    loss.loss /= n;
    grad.scale(1.0 / n);
    Ok((loss, grad))
}
