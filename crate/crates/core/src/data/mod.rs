//! Datasets: ingestion, splitting, standardization and synthetic cohorts.

mod load;
mod schema;
mod synth;

pub use load::{load, CategoricalColumn, FeatureEncoding, Table};
pub use schema::{ModalitySchema, Schema};
pub use synth::{synthesize, SynthSpec, SyntheticCohort};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityData {
    pub name: String,
    pub encoding: FeatureEncoding,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    pub ids: Vec<String>,
    pub modalities: Vec<ModalityData>,
    /// Observed times in original units.
    pub time: Vec<f64>,
    /// `true` when the event was observed.
    pub event: Vec<bool>,
    pub imputed_cells: usize,
    pub dropped_rows: usize,
}

impl SurvivalDataset {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.time.len() != n || self.event.len() != n || self.modalities.iter().any(|m| m.rows.len() != n) {
            return Err(Error::Data("dataset columns differ in length".into()));
        }
        if self.time.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Data("times must be positive and finite".into()));
        }
        if self.modalities.iter().flat_map(|m| m.rows.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        Ok(())
    }

    /// Feature rows of every modality restricted to `rows`, in that order.
    pub fn features_of(&self, rows: &[usize]) -> Vec<Vec<Vec<f64>>> {
        self.modalities
            .iter()
            .map(|m| rows.iter().map(|&r| m.rows[r].clone()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { fractions: [0.6, 0.2, 0.2], seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn part(&self, part: Part) -> &[usize] {
        match part {
            Part::Train => &self.train,
            Part::Val => &self.val,
            Part::Test => &self.test,
        }
    }
}

/// Seeded shuffle of `0..n` cut into contiguous train/validation/test parts.
pub fn split(n: usize, spec: &SplitSpec) -> Result<Split> {
    let f = spec.fractions;
    if f.iter().any(|v| !(*v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("fractions {f:?} must be positive and sum to 1")));
    }
    if n < 5 {
        return Err(Error::Split(format!("need at least 5 rows to split, got {n}")));
    }
    let n_train = (f[0] * n as f64).round() as usize;
    let n_val = (f[1] * n as f64).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::Split(format!("fractions {f:?} leave an empty part for n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    Ok(Split {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    })
}

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Zero-variance columns keep a unit scale and are left uncentred.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::domain("standardizer needs at least one row"));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in stds.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (j, s) in stds.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            if !(*s > 1e-12) {
                log::info!("feature {j} is constant on the training rows; left unscaled");
                *s = 1.0;
                means[j] = 0.0;
            }
        }
        Ok(Standardizer { means, stds })
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.stds[j] == 1.0 && self.means[j] == 0.0
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn undo(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| v * s + m).collect()
    }
}
