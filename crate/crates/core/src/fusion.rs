//! Multimodal decision fusion with learned modality reliabilities.

use serde::{Deserialize, Serialize};

use crate::ennreg::UnimodalModel;
use crate::error::{Error, Result};
use crate::grfn::{combine_unchecked, Grfn};
use crate::special::logistic;
use crate::transform::TimeTransform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Modality {
    pub name: String,
    pub net: UnimodalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodalModel {
    pub modalities: Vec<Modality>,
    /// Logit of each modality's reliability.
    pub reliab_raw: Vec<f64>,
    /// When set, every reliability is exactly 1 and `reliab_raw` is ignored.
    pub reliab_frozen: bool,
    pub transform: TimeTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub fused: Grfn,
    pub per_modality: Vec<Grfn>,
    pub discounted: Vec<Grfn>,
    pub reliabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Most plausible survival time in original units.
    pub time: f64,
    /// Fused GRFN in transformed units; `sigma2` is the aleatory and `h` the
    /// epistemic part of the uncertainty.
    pub grfn: Grfn,
}

impl MultimodalModel {
    pub fn new(modalities: Vec<Modality>, transform: TimeTransform) -> Result<Self> {
        let t = modalities.len();
        let model = MultimodalModel {
            modalities,
            reliab_raw: vec![0.0; t],
            reliab_frozen: false,
            transform,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(Error::domain("a model needs at least one modality"));
        }
        if self.reliab_raw.len() != self.modalities.len() {
            return Err(Error::domain("one reliability per modality is required"));
        }
        for (i, m) in self.modalities.iter().enumerate() {
            if self.modalities[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::domain(format!("duplicate modality name '{}'", m.name)));
            }
            m.net.validate()?;
        }
        Ok(())
    }

    pub fn n_modalities(&self) -> usize {
        self.modalities.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.modalities.iter().map(|m| m.name.as_str()).collect()
    }

    pub fn reliabilities(&self) -> Vec<f64> {
        if self.reliab_frozen {
            vec![1.0; self.modalities.len()]
        } else {
            self.reliab_raw.iter().map(|&r| logistic(r)).collect()
        }
    }

    fn check_inputs(&self, xs: &[&[f64]]) -> Result<()> {
        if xs.len() != self.modalities.len() {
            return Err(Error::domain(format!(
                "{} feature vectors supplied for {} modalities",
                xs.len(),
                self.modalities.len()
            )));
        }
        for (m, x) in self.modalities.iter().zip(xs) {
            if x.len() != m.net.dim() {
                return Err(Error::Compatibility {
                    modality: m.name.clone(),
                    reason: format!("expected {} features, got {}", m.net.dim(), x.len()),
                });
            }
        }
        Ok(())
    }

    /// Runs every modality, discounts by its reliability and combines.
    pub fn fuse(&self, xs: &[&[f64]]) -> Result<FusionOutput> {
        self.check_inputs(xs)?;
        let reliabilities = self.reliabilities();
        let per_modality = self
            .modalities
            .iter()
            .zip(xs)
            .map(|(m, x)| m.net.forward(x))
            .collect::<Result<Vec<_>>>()?;
        let discounted: Vec<Grfn> = per_modality
            .iter()
            .zip(&reliabilities)
            .map(|(g, &r)| Grfn { h: r * g.h, ..*g })
            .collect();
        let fused = combine_unchecked(&per_modality, &reliabilities);
        Ok(FusionOutput {
            fused,
            per_modality,
            discounted,
            reliabilities,
        })
    }

    pub fn predict(&self, xs: &[&[f64]]) -> Result<Prediction> {
        let fused = self.fuse(xs)?.fused;
        Ok(Prediction {
            time: self.transform.inverse(fused.mu)?,
            grfn: fused,
        })
    }

    pub fn n_params(&self) -> usize {
        self.modalities.iter().map(|m| m.net.n_params()).sum::<usize>() + self.reliab_raw.len()
    }

    /// All trainable parameters: each modality in order, then the reliability logits.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for m in &self.modalities {
            m.net.write_params(&mut out);
        }
        out.extend_from_slice(&self.reliab_raw);
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "parameter vector length");
        let mut offset = 0;
        for m in &mut self.modalities {
            offset += m.net.read_params(&flat[offset..]);
        }
        self.reliab_raw.copy_from_slice(&flat[offset..]);
    }
}
