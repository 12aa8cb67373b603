//! Dataset schema document.

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalitySchema {
    pub file: PathBuf,
    /// Numeric feature columns.
    #[serde(default)]
    pub feature_columns: Vec<String>,
    /// Columns one-hot encoded over the levels seen at load time.
    #[serde(default)]
    pub categorical_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub id_column: String,
    pub time_column: String,
    pub event_column: String,
    /// File holding the time and event columns; defaults to the first
    /// modality's file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_file: Option<PathBuf>,
    pub modalities: IndexMap<String, ModalitySchema>,
}

impl Schema {
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(Error::Schema("at least one modality is required".into()));
        }
        for (name, m) in &self.modalities {
            if m.feature_columns.is_empty() && m.categorical_columns.is_empty() {
                return Err(Error::Schema(format!("modality '{name}' declares no feature columns")));
            }
            let mut seen = std::collections::HashSet::new();
            for c in m.feature_columns.iter().chain(&m.categorical_columns) {
                if !seen.insert(c) {
                    return Err(Error::Schema(format!("column '{c}' declared twice in modality '{name}'")));
                }
            }
        }
        Ok(())
    }

    pub fn outcome_path(&self) -> &Path {
        match &self.outcome_file {
            Some(p) => p,
            None => &self.modalities[0].file,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
id_column = "id"
time_column = "time"
event_column = "event"

[modalities.clinical]
file = "clinical.csv"
feature_columns = ["age", "grade"]
categorical_columns = ["stage"]

[modalities.omics]
file = "omics.csv"
feature_columns = ["g1"]
"#;

    #[test]
    fn parses_and_keeps_order() {
        let s = Schema::from_toml(TEXT).unwrap();
        assert_eq!(s.modalities.keys().collect::<Vec<_>>(), vec!["clinical", "omics"]);
        assert_eq!(s.outcome_path(), Path::new("clinical.csv"));
        assert_eq!(Schema::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(Schema::from_toml("id_column = 3"), Err(Error::Schema(_))));
        let dup = TEXT.replace("[\"g1\"]", "[\"g1\", \"g1\"]");
        assert!(matches!(Schema::from_toml(&dup), Err(Error::Schema(_))));
    }
}
