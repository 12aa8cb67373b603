//! Evidential regression network for a single modality.
//!
//! Three stages map a feature vector to a GRFN: prototype activations
//! `s_k(x) = exp(-gamma_k^2 ||x - p_k||^2)`, one GRFN per prototype
//! `Ñ(beta_k . x + beta_k0, sigma2_k, s_k(x) h_k)`, and their `⊞` combination.
//! `sigma2_k` and `h_k` are stored as softplus-raw values so every trainable
//! parameter is unconstrained.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grfn::Grfn;
use crate::kmeans::{kmeans, squared_distance};
use crate::special::{softplus, softplus_inv};

pub const KMEANS_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnimodalModel {
    pub prototypes: Vec<Vec<f64>>,
    pub gammas: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub beta0s: Vec<f64>,
    pub raw_sigma2s: Vec<f64>,
    pub raw_hs: Vec<f64>,
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub activations: Vec<f64>,
    pub mus: Vec<f64>,
    pub sigma2s: Vec<f64>,
    pub hs: Vec<f64>,
    pub output: Grfn,
}

impl UnimodalModel {
    pub fn n_prototypes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn dim(&self) -> usize {
        self.prototypes.first().map_or(0, Vec::len)
    }

    pub fn sigma2(&self, k: usize) -> f64 {
        softplus(self.raw_sigma2s[k])
    }

    pub fn h(&self, k: usize) -> f64 {
        softplus(self.raw_hs[k])
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_prototypes();
        let d = self.dim();
        let consistent = k > 0
            && self.gammas.len() == k
            && self.betas.len() == k
            && self.beta0s.len() == k
            && self.raw_sigma2s.len() == k
            && self.raw_hs.len() == k
            && self.prototypes.iter().all(|p| p.len() == d)
            && self.betas.iter().all(|b| b.len() == d);
        if !consistent {
            return Err(Error::domain("inconsistent prototype parameter shapes"));
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "feature vector has dimension {}, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn activations(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.activations_unchecked(x))
    }

    fn activations_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.prototypes
            .iter()
            .zip(&self.gammas)
            .map(|(p, g)| (-g * g * squared_distance(x, p)).exp())
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Grfn> {
        Ok(self.trace(x)?.output)
    }

    pub fn trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_dim(x)?;
        let activations = self.activations_unchecked(x);
        let k = self.n_prototypes();
        let mut mus = Vec::with_capacity(k);
        let mut sigma2s = Vec::with_capacity(k);
        let mut hs = Vec::with_capacity(k);
        for j in 0..k {
            let mu = self.betas[j].iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>() + self.beta0s[j];
            mus.push(mu);
            sigma2s.push(self.sigma2(j));
            hs.push(self.h(j));
        }
        let pieces: Vec<Grfn> = (0..k)
            .map(|j| Grfn { mu: mus[j], sigma2: sigma2s[j], h: hs[j] })
            .collect();
        let output = crate::grfn::combine_unchecked(&pieces, &activations);
        Ok(ForwardTrace { activations, mus, sigma2s, hs, output })
    }

    /// Prototype placement by seeded k-means, then the default parameter scheme.
    pub fn init(features: &[Vec<f64>], y: &[f64], k: usize, seed: u64) -> Result<Self> {
        let n = features.len();
        if k == 0 {
            return Err(Error::domain("prototype count must be at least 1"));
        }
        if k > n {
            return Err(Error::domain(format!("{k} prototypes requested for {n} rows")));
        }
        if y.len() != n {
            return Err(Error::domain("features and targets differ in length"));
        }
        let d = features[0].len();
        if features.iter().any(|r| r.len() != d) {
            return Err(Error::domain("ragged feature matrix"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prototypes = kmeans(features, k, KMEANS_MAX_ITER, &mut rng);

        let gammas = prototypes
            .iter()
            .map(|p| {
                let mean_d2 = features.iter().map(|x| squared_distance(x, p)).sum::<f64>() / n as f64;
                if mean_d2 > 0.0 {
                    (std::f64::consts::LN_2 / mean_d2).sqrt()
                } else {
                    1.0
                }
            })
            .collect();

        let y_mean = y.iter().sum::<f64>() / n as f64;
        let y_var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
        let y_var = if y_var > 0.0 { y_var } else { 1.0 };

        Ok(UnimodalModel {
            prototypes,
            gammas,
            betas: vec![vec![0.0; d]; k],
            beta0s: vec![y_mean; k],
            raw_sigma2s: vec![softplus_inv(y_var); k],
            raw_hs: vec![softplus_inv(1.0); k],
        })
    }

    /// Number of trainable scalars.
    pub fn n_params(&self) -> usize {
        let k = self.n_prototypes();
        let d = self.dim();
        2 * k * d + 4 * k
    }

    /// Appends parameters in the canonical order: prototypes, gammas, betas,
    /// beta0s, raw sigma2s, raw hs.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        self.prototypes.iter().for_each(|p| out.extend_from_slice(p));
        out.extend_from_slice(&self.gammas);
        self.betas.iter().for_each(|b| out.extend_from_slice(b));
        out.extend_from_slice(&self.beta0s);
        out.extend_from_slice(&self.raw_sigma2s);
        out.extend_from_slice(&self.raw_hs);
    }

    /// Reads parameters written by [`Self::write_params`]; returns the count consumed.
    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let mut it = src.iter().copied();
        let mut take = |dst: &mut [f64]| dst.iter_mut().for_each(|v| *v = it.next().expect("short parameter vector"));
        self.prototypes.iter_mut().for_each(|p| take(p));
        take(&mut self.gammas);
        self.betas.iter_mut().for_each(|b| take(b));
        take(&mut self.beta0s);
        take(&mut self.raw_sigma2s);
        take(&mut self.raw_hs);
        self.n_params()
    }
}
