//! CSV ingestion, cross-file joins, imputation and one-hot encoding.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::schema::Schema;
use super::{ModalityData, SurvivalDataset};

const MISSING: [&str; 6] = ["", "NA", "NaN", "nan", "null", "NULL"];

fn is_missing(cell: &str) -> bool {
    MISSING.contains(&cell.trim())
}

/// A CSV file held as strings.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader.headers()?.iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Table { path: path.display().to_string(), headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' missing from {}", self.path)))
    }

    /// Row index by id; duplicate ids are a data error.
    fn index_by(&self, id_col: usize) -> Result<HashMap<&str, usize>> {
        let mut index = HashMap::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if index.insert(row[id_col].as_str(), i).is_some() {
                return Err(Error::Data(format!("duplicate id '{}' in {}", row[id_col], self.path)));
            }
        }
        Ok(index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub column: String,
    pub levels: Vec<String>,
}

/// How raw columns of one modality become a numeric feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub numeric_columns: Vec<String>,
    /// Values substituted for missing numeric cells.
    pub medians: Vec<f64>,
    pub categorical: Vec<CategoricalColumn>,
}

impl FeatureEncoding {
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = self.numeric_columns.clone();
        for c in &self.categorical {
            names.extend(c.levels.iter().map(|l| format!("{}={l}", c.column)));
        }
        names
    }

    pub fn dim(&self) -> usize {
        self.numeric_columns.len() + self.categorical.iter().map(|c| c.levels.len()).sum::<usize>()
    }

    /// Encodes one row; returns the vector and the number of imputed cells.
    /// Unknown or missing categorical values encode as all zeros.
    pub fn encode(&self, table: &Table, row: &[String]) -> Result<(Vec<f64>, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        let mut imputed = 0;
        for (name, median) in self.numeric_columns.iter().zip(&self.medians) {
            let cell = &row[table.column(name)?];
            match parse_number(cell, name, table)? {
                Some(v) => out.push(v),
                None => {
                    out.push(*median);
                    imputed += 1;
                }
            }
        }
        for c in &self.categorical {
            let cell = &row[table.column(&c.column)?];
            imputed += is_missing(cell) as usize;
            out.extend(c.levels.iter().map(|l| if l == cell.trim() { 1.0 } else { 0.0 }));
        }
        Ok((out, imputed))
    }
}

fn parse_number(cell: &str, column: &str, table: &Table) -> Result<Option<f64>> {
    if is_missing(cell) {
        return Ok(None);
    }
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Data(format!("non-numeric value '{cell}' in column '{column}' of {}", table.path))),
    }
}

fn parse_event(cell: &str) -> Option<bool> {
    match cell.trim() {
        "1" | "1.0" | "true" | "TRUE" | "True" => Some(true),
        "0" | "0.0" | "false" | "FALSE" | "False" => Some(false),
        _ => None,
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Loads every file named by `schema`, resolving relative paths against `base`.
pub fn load(schema: &Schema, base: &Path) -> Result<SurvivalDataset> {
    schema.validate()?;
    let outcome = Table::read(&base.join(schema.outcome_path()))?;
    let tables = schema
        .modalities
        .values()
        .map(|m| Table::read(&base.join(&m.file)))
        .collect::<Result<Vec<_>>>()?;

    let out_id = outcome.column(&schema.id_column)?;
    let time_col = outcome.column(&schema.time_column)?;
    let event_col = outcome.column(&schema.event_column)?;
    let out_index = outcome.index_by(out_id)?;
    let mut indexes = Vec::with_capacity(tables.len());
    for (table, m) in tables.iter().zip(schema.modalities.values()) {
        let id = table.column(&schema.id_column)?;
        for c in m.feature_columns.iter().chain(&m.categorical_columns) {
            table.column(c)?;
        }
        indexes.push((id, table.index_by(id)?));
    }

    let mut orphans = BTreeSet::new();
    for (_, idx) in &indexes {
        orphans.extend(idx.keys().filter(|k| !out_index.contains_key(*k)).map(|k| k.to_string()));
        orphans.extend(out_index.keys().filter(|k| !idx.contains_key(*k)).map(|k| k.to_string()));
    }
    if !orphans.is_empty() {
        return Err(Error::Join(orphans.into_iter().collect()));
    }

    let mut ids = Vec::new();
    let mut time = Vec::new();
    let mut event = Vec::new();
    let mut dropped_rows = 0;
    for row in &outcome.rows {
        let t = &row[time_col];
        let e = &row[event_col];
        if is_missing(t) || is_missing(e) {
            dropped_rows += 1;
            continue;
        }
        let t = parse_number(t, &schema.time_column, &outcome)?.expect("checked non-missing");
        if t <= 0.0 {
            return Err(Error::Data(format!("non-positive time {t} for id '{}'", row[out_id])));
        }
        let e = parse_event(e)
            .ok_or_else(|| Error::Data(format!("event indicator '{e}' for id '{}' is not 0/1", row[out_id])))?;
        ids.push(row[out_id].clone());
        time.push(t);
        event.push(e);
    }
    if ids.is_empty() {
        return Err(Error::Data("no rows with both time and event".into()));
    }
    if dropped_rows > 0 {
        log::info!("dropped {dropped_rows} rows with missing time or event");
    }

    let mut modalities = Vec::with_capacity(tables.len());
    let mut imputed_cells = 0;
    for ((name, m), (table, (_, index))) in schema.modalities.iter().zip(tables.iter().zip(&indexes)) {
        let rows: Vec<&Vec<String>> = ids.iter().map(|id| &table.rows[index[id.as_str()]]).collect();
        let mut medians = Vec::with_capacity(m.feature_columns.len());
        for c in &m.feature_columns {
            let col = table.column(c)?;
            let mut present = Vec::with_capacity(rows.len());
            for row in &rows {
                if let Some(v) = parse_number(&row[col], c, table)? {
                    present.push(v);
                }
            }
            if present.is_empty() {
                return Err(Error::Data(format!("column '{c}' of modality '{name}' has no values")));
            }
            medians.push(median(&mut present));
        }
        let categorical = m
            .categorical_columns
            .iter()
            .map(|c| {
                let col = table.column(c)?;
                let levels: BTreeSet<&str> = rows.iter().map(|r| r[col].trim()).filter(|v| !is_missing(v)).collect();
                Ok(CategoricalColumn { column: c.clone(), levels: levels.into_iter().map(String::from).collect() })
            })
            .collect::<Result<Vec<_>>>()?;
        let encoding = FeatureEncoding { numeric_columns: m.feature_columns.clone(), medians, categorical };
        let mut encoded = Vec::with_capacity(rows.len());
        for row in &rows {
            let (x, k) = encoding.encode(table, row)?;
            imputed_cells += k;
            encoded.push(x);
        }
        modalities.push(ModalityData { name: name.clone(), encoding, rows: encoded });
    }
    if imputed_cells > 0 {
        log::info!("imputed {imputed_cells} missing feature cells");
    }
    Ok(SurvivalDataset { ids, modalities, time, event, imputed_cells, dropped_rows })
}
