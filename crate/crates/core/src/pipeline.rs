//! End-to-end fitting and evaluation, and the persisted model document.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{split, FeatureEncoding, Part, Split, Standardizer, SurvivalDataset, Table};
use crate::ennreg::UnimodalModel;
use crate::error::{Error, Result};
use crate::fusion::{Modality, MultimodalModel};
use crate::metrics::{evaluate, Cohort, EvalReport};
use crate::training::{train, Mode, Observation, TrainData, TrainLog};
use crate::transform::TimeTransform;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityRecord {
    pub name: String,
    pub feature_names: Vec<String>,
    pub encoding: FeatureEncoding,
    pub standardizer: Standardizer,
    pub net: UnimodalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub seed: u64,
    pub config_digest: String,
    /// Kept epoch per training scope.
    pub best_epoch: IndexMap<String, usize>,
    pub n_train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub mode: Mode,
    /// Column identifying rows in input files.
    pub id_column: String,
    pub transform: TimeTransform,
    pub modalities: Vec<ModalityRecord>,
    pub reliab_raw: Vec<f64>,
    pub reliab_frozen: bool,
    pub reliabilities: IndexMap<String, f64>,
    pub metadata: Metadata,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mf: ModelFile = serde_json::from_str(text)?;
        if mf.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format version {}", mf.format_version)));
        }
        mf.model()?;
        Ok(mf)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn model(&self) -> Result<MultimodalModel> {
        let model = MultimodalModel {
            modalities: self
                .modalities
                .iter()
                .map(|m| Modality { name: m.name.clone(), net: m.net.clone() })
                .collect(),
            reliab_raw: self.reliab_raw.clone(),
            reliab_frozen: self.reliab_frozen,
            transform: self.transform,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks that `ds` carries the same modalities and feature layout.
    pub fn check_compatible(&self, ds: &SurvivalDataset) -> Result<()> {
        if ds.modalities.len() != self.modalities.len() {
            return Err(Error::Compatibility {
                modality: "*".into(),
                reason: format!("model has {} modalities, data has {}", self.modalities.len(), ds.modalities.len()),
            });
        }
        for (m, d) in self.modalities.iter().zip(&ds.modalities) {
            if m.name != d.name {
                return Err(Error::Compatibility { modality: m.name.clone(), reason: format!("data has '{}' in its place", d.name) });
            }
            let names = d.encoding.feature_names();
            if names != m.feature_names {
                return Err(Error::Compatibility {
                    modality: m.name.clone(),
                    reason: format!("expected features {:?}, data has {:?}", m.feature_names, names),
                });
            }
        }
        Ok(())
    }

    /// Standardized feature rows of `rows` for every modality.
    pub fn features(&self, ds: &SurvivalDataset, rows: &[usize]) -> Result<Vec<Vec<Vec<f64>>>> {
        self.check_compatible(ds)?;
        Ok(self
            .modalities
            .iter()
            .zip(&ds.modalities)
            .map(|(m, d)| rows.iter().map(|&r| m.standardizer.apply(&d.rows[r])).collect())
            .collect())
    }

    /// Encodes and standardizes every row of a raw table holding all
    /// modalities' columns side by side.
    pub fn encode_table(&self, table: &Table) -> Result<Vec<Vec<Vec<f64>>>> {
        self.modalities
            .iter()
            .map(|m| {
                table
                    .rows
                    .iter()
                    .map(|row| {
                        let (x, _) = m.encoding.encode(table, row).map_err(|e| match e {
                            Error::Schema(reason) => Error::Compatibility { modality: m.name.clone(), reason },
                            other => other,
                        })?;
                        Ok(m.standardizer.apply(&x))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Everything produced by one fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model_file: ModelFile,
    pub model: MultimodalModel,
    pub log: TrainLog,
    pub split: Split,
    pub val_report: EvalReport,
}

fn observations(tt: &TimeTransform, ds: &SurvivalDataset, rows: &[usize]) -> Result<Vec<Observation>> {
    rows.iter()
        .map(|&r| Ok(Observation { y: tt.forward(ds.time[r])?, event: ds.event[r] }))
        .collect()
}

/// Split, fit the transform and standardizers on the training part,
/// initialize and train. The run seed drives the split, prototype
/// initialization and batch shuffling.
pub fn fit_dataset(ds: &SurvivalDataset, id_column: &str, cfg: &RunConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    ds.validate()?;
    let parts = split(ds.n(), &cfg.split_spec())?;
    let train_times: Vec<f64> = parts.train.iter().map(|&r| ds.time[r]).collect();
    let transform = TimeTransform::fit(&train_times)?;

    let standardizers = ds
        .modalities
        .iter()
        .map(|m| Standardizer::fit(&parts.train.iter().map(|&r| m.rows[r].clone()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let scaled = |rows: &[usize]| -> Vec<Vec<Vec<f64>>> {
        ds.modalities
            .iter()
            .zip(&standardizers)
            .map(|(m, st)| rows.iter().map(|&r| st.apply(&m.rows[r])).collect())
            .collect()
    };
    let train_data = TrainData { features: scaled(&parts.train), obs: observations(&transform, ds, &parts.train)? };
    let val_data = TrainData { features: scaled(&parts.val), obs: observations(&transform, ds, &parts.val)? };

    let train_ys: Vec<f64> = train_data.obs.iter().map(|o| o.y).collect();
    let modalities = ds
        .modalities
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let k = cfg.prototypes_for(&m.name);
            let net = UnimodalModel::init(&train_data.features[i], &train_ys, k, cfg.seed.wrapping_add(i as u64))?;
            Ok(Modality { name: m.name.clone(), net })
        })
        .collect::<Result<Vec<_>>>()?;
    let initial = MultimodalModel::new(modalities, transform)?;
    let names: Vec<&str> = ds.modalities.iter().map(|m| m.name.as_str()).collect();
    let loss_cfg = cfg.loss_config(&names, transform.y_std)?;
    let (model, log) = train(initial, &train_data, &val_data, &cfg.train_config(), &loss_cfg)?;

    let model_file = ModelFile {
        format_version: FORMAT_VERSION,
        mode: cfg.mode,
        id_column: id_column.to_string(),
        transform,
        modalities: ds
            .modalities
            .iter()
            .zip(standardizers)
            .zip(&model.modalities)
            .map(|((d, standardizer), m)| ModalityRecord {
                name: d.name.clone(),
                feature_names: d.encoding.feature_names(),
                encoding: d.encoding.clone(),
                standardizer,
                net: m.net.clone(),
            })
            .collect(),
        reliab_raw: model.reliab_raw.clone(),
        reliab_frozen: model.reliab_frozen,
        reliabilities: names.iter().map(|n| n.to_string()).zip(model.reliabilities()).collect(),
        metadata: Metadata {
            seed: cfg.seed,
            config_digest: cfg.digest(),
            best_epoch: log.runs.iter().map(|r| (r.scope.clone(), r.best_epoch)).collect(),
            n_train: parts.train.len(),
        },
    };
    let val_report = evaluate_rows(&model_file, &model, ds, &parts.val)?;
    Ok(FitOutcome { model_file, model, log, split: parts, val_report })
}

pub fn evaluate_rows(mf: &ModelFile, model: &MultimodalModel, ds: &SurvivalDataset, rows: &[usize]) -> Result<EvalReport> {
    let features = mf.features(ds, rows)?;
    let ids: Vec<String> = rows.iter().map(|&r| ds.ids[r].clone()).collect();
    let times: Vec<f64> = rows.iter().map(|&r| ds.time[r]).collect();
    let events: Vec<bool> = rows.iter().map(|&r| ds.event[r]).collect();
    evaluate(model, &Cohort { ids: &ids, features: &features, times: &times, events: &events })
}

/// Evaluates a saved model on one part of the split its seed defines.
pub fn evaluate_part(mf: &ModelFile, ds: &SurvivalDataset, cfg: &RunConfig, part: Part) -> Result<EvalReport> {
    let spec = crate::data::SplitSpec { fractions: cfg.split_fractions, seed: mf.metadata.seed };
    let parts = split(ds.n(), &spec)?;
    evaluate_rows(mf, &mf.model()?, ds, parts.part(part))
}
