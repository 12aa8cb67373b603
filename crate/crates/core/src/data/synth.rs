//! Synthetic two-modality cohort with a known log-linear survival model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FeatureEncoding, ModalityData, SurvivalDataset};

pub const SYNTH_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// Target fraction of right-censored rows.
    pub censoring: f64,
    pub intercept: f64,
    /// Coefficients of the informative modality in the log-time model.
    pub signal_weights: [f64; SYNTH_DIM],
    /// Coefficient of the first feature of the noise modality.
    pub noise_weight: f64,
    pub noise_sd: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            censoring: 0.6,
            intercept: 1.0,
            signal_weights: [0.2, -0.12, 0.08, 0.1, -0.1],
            noise_weight: 0.0,
            noise_sd: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub dataset: SurvivalDataset,
    /// Uncensored event times.
    pub true_times: Vec<f64>,
    /// Log-time linear predictor of each row.
    pub linear_predictor: Vec<f64>,
    pub achieved_censoring: f64,
}

fn censored_fraction(true_times: &[f64], uniforms: &[f64], rate: f64) -> f64 {
    let censored = true_times
        .iter()
        .zip(uniforms)
        .filter(|(t, u)| -u.ln() / rate < **t)
        .count();
    censored as f64 / true_times.len() as f64
}

/// Exponential censoring rate whose empirical censored fraction on this
/// sample is closest to `target`, found by bisection on the log scale.
fn calibrate_rate(true_times: &[f64], uniforms: &[f64], target: f64) -> f64 {
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if censored_fraction(true_times, uniforms, mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = censored_fraction(true_times, uniforms, lo.exp());
    let b = censored_fraction(true_times, uniforms, hi.exp());
    if (a - target).abs() <= (b - target).abs() {
        lo.exp()
    } else {
        hi.exp()
    }
}

fn numeric_modality(name: &str, prefix: &str, rows: Vec<Vec<f64>>) -> ModalityData {
    ModalityData {
        name: name.into(),
        encoding: FeatureEncoding {
            numeric_columns: (1..=SYNTH_DIM).map(|j| format!("{prefix}{j}")).collect(),
            medians: vec![0.0; SYNTH_DIM],
            categorical: Vec::new(),
        },
        rows,
    }
}

/// Modality `signal` drives `log T = intercept + w . x + noise`; modality
/// `noise` is independent of the outcome unless `noise_weight` is set.
pub fn synthesize(n: usize, seed: u64, spec: &SynthSpec) -> Result<SyntheticCohort> {
    if n < 50 {
        return Err(Error::domain(format!("synthetic cohorts need n >= 50, got {n}")));
    }
    if !(0.0..1.0).contains(&spec.censoring) {
        return Err(Error::Config(format!("censoring rate {} outside [0, 1)", spec.censoring)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..SYNTH_DIM).map(|_| StandardNormal.sample(rng)).collect() };
    let mut signal = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    let mut linear_predictor = Vec::with_capacity(n);
    let mut true_times = Vec::with_capacity(n);
    let mut uniforms = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = draw(&mut rng);
        let x2 = draw(&mut rng);
        let lp = spec.intercept
            + x1.iter().zip(&spec.signal_weights).map(|(a, b)| a * b).sum::<f64>()
            + spec.noise_weight * x2[0];
        let e: f64 = StandardNormal.sample(&mut rng);
        true_times.push((lp + spec.noise_sd * e).exp());
        uniforms.push(1.0 - rng.random::<f64>());
        linear_predictor.push(lp);
        signal.push(x1);
        noise.push(x2);
    }

    let (time, event): (Vec<f64>, Vec<bool>) = if spec.censoring == 0.0 {
        (true_times.clone(), vec![true; n])
    } else {
        let rate = calibrate_rate(&true_times, &uniforms, spec.censoring);
        true_times
            .iter()
            .zip(&uniforms)
            .map(|(&t, u)| {
                let c = -u.ln() / rate;
                if c < t {
                    (c, false)
                } else {
                    (t, true)
                }
            })
            .unzip()
    };
    let achieved = event.iter().filter(|e| !**e).count() as f64 / n as f64;
    if (achieved - spec.censoring).abs() > 0.05 {
        log::warn!("censoring target {} not reachable; achieved {achieved:.3}", spec.censoring);
    }
    let dataset = SurvivalDataset {
        ids: (0..n).map(|i| format!("s{i:05}")).collect(),
        modalities: vec![numeric_modality("signal", "x", signal), numeric_modality("noise", "z", noise)],
        time,
        event,
        imputed_cells: 0,
        dropped_rows: 0,
    };
    dataset.validate()?;
    Ok(SyntheticCohort { dataset, true_times, linear_predictor, achieved_censoring: achieved })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_censoring() {
        let c = synthesize(100, 1, &SynthSpec { censoring: 0.0, ..Default::default() }).unwrap();
        assert!(c.dataset.event.iter().all(|&e| e));
        assert_eq!(c.dataset.time, c.true_times);
    }

    #[test]
    fn deterministic() {
        let a = synthesize(200, 4, &SynthSpec::default()).unwrap();
        let b = synthesize(200, 4, &SynthSpec::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hits_censoring_target() {
        for target in [0.3, 0.6, 0.8] {
            let c = synthesize(1000, 9, &SynthSpec { censoring: target, ..Default::default() }).unwrap();
            assert!((c.achieved_censoring - target).abs() <= 0.05, "{target}: {}", c.achieved_censoring);
        }
    }

    #[test]
    fn observed_never_exceeds_true_time() {
        let c = synthesize(300, 2, &SynthSpec::default()).unwrap();
        for ((t, e), tt) in c.dataset.time.iter().zip(&c.dataset.event).zip(&c.true_times) {
            assert!(t <= tt);
            if *e {
                assert_eq!(t, tt);
            }
        }
    }
}
