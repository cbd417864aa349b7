//! Discrete variable schema and encounter record ingestion.
//!
//! An encounter record is a complete assignment of every study variable.
//! Rows with blank or out-of-range cells are rejected rather than imputed:
//! the scoring and estimation code in [`crate::bn`] assumes complete
//! discrete data.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// One discrete study variable: a short code, a display name and its states.
///
/// State values are consecutive integers starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub code: String,
    pub display_name: String,
    pub states: Vec<(u8, String)>,
}

impl VariableSpec {
    pub fn new(code: &str, display_name: &str, states: &[&str]) -> Self {
        VariableSpec {
            code: code.to_string(),
            display_name: display_name.to_string(),
            states: states
                .iter()
                .enumerate()
                .map(|(i, label)| (i as u8, label.to_string()))
                .collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// Ordered list of variables; the order is the canonical index order for
/// every count table and CPT in the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    variables: Vec<VariableSpec>,
}

impl Schema {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for spec in &variables {
            if spec.states.len() < 2 {
                return Err(Error::Schema(format!(
                    "variable '{}' needs at least 2 states",
                    spec.code
                )));
            }
            for (i, (value, _)) in spec.states.iter().enumerate() {
                if *value as usize != i {
                    return Err(Error::Schema(format!(
                        "variable '{}': state values must be consecutive from 0",
                        spec.code
                    )));
                }
            }
            if !seen.insert(spec.code.clone()) {
                return Err(Error::Schema(format!("duplicate variable code '{}'", spec.code)));
            }
        }
        Ok(Schema { variables })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, index: usize) -> &VariableSpec {
        &self.variables[index]
    }

    pub fn cardinality(&self, index: usize) -> usize {
        self.variables[index].cardinality()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.code == code)
    }

    pub fn code(&self, index: usize) -> &str {
        &self.variables[index].code
    }
}

/// The six-variable schema used throughout the shipped datasets and demos.
pub fn study_schema() -> Schema {
    Schema::new(vec![
        VariableSpec::new(
            "Surgery",
            "Surgery",
            &["not thoracic", "might be thoracic", "definitely thoracic"],
        ),
        VariableSpec::new(
            "Pre_beta",
            "Receiving BB before surgery",
            &["not receiving BB", "receiving BB"],
        ),
        VariableSpec::new(
            "Post_beta",
            "Receiving BB after surgery",
            &["not receiving BB", "receiving BB"],
        ),
        VariableSpec::new("Hypotension", "Hypotension", &["no Hypotension", "has Hypotension"]),
        VariableSpec::new("Epidural", "Epidural catheter placed", &["no Epidural", "has Epidural"]),
        VariableSpec::new("AF", "Having AF during the encounter", &["no AF", "has AF"]),
    ])
    .expect("study schema is valid")
}

/// One hospital encounter: an opaque id plus one state per schema variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncounterRecord {
    pub encounter_id: String,
    pub values: Vec<u8>,
}

/// Rules for turning raw-ish clinical fields into schema states.
#[derive(Debug, Clone)]
pub struct EncodingRules {
    /// Systolic BP below this reads as hypotension.
    pub hypotension_threshold_mmhg: f64,
    /// BB administration within this many hours after surgery counts as post-operative.
    pub post_beta_window_hours: f64,
    /// Procedure code to Surgery state (0/1/2). Unmapped codes contribute 0.
    pub thoracic_cpt_map: BTreeMap<String, u8>,
    /// Diagnosis codes with this prefix flag AF.
    pub af_icd9_prefix: String,
    /// Which BP reading the hypotension flag is taken from.
    pub bp_read_time_rule: String,
}

impl Default for EncodingRules {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert("43415".to_string(), 1);
        map.insert("31760".to_string(), 2);
        EncodingRules {
            hypotension_threshold_mmhg: 100.0,
            post_beta_window_hours: 24.0,
            thoracic_cpt_map: map,
            af_icd9_prefix: "427".to_string(),
            bp_read_time_rule: "first reading after 06:00 on the day following surgery".to_string(),
        }
    }
}

impl EncodingRules {
    pub fn validate(&self) -> Result<()> {
        if self.hypotension_threshold_mmhg <= 0.0 {
            return Err(Error::Input("hypotension threshold must be positive".into()));
        }
        if self.post_beta_window_hours <= 0.0 {
            return Err(Error::Input("post-surgery window must be positive".into()));
        }
        for (code, state) in &self.thoracic_cpt_map {
            if *state > 2 {
                return Err(Error::Input(format!(
                    "CPT code {code} maps to invalid Surgery state {state}"
                )));
            }
        }
        Ok(())
    }

    /// Loads the `cpt_code,surgery_state` map from a CSV file, replacing the
    /// built-in entries.
    pub fn load_cpt_map(&mut self, path: &Path) -> Result<()> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let code_col = headers
            .iter()
            .position(|h| h == "cpt_code")
            .ok_or_else(|| Error::file(path, "missing column 'cpt_code'"))?;
        let state_col = headers
            .iter()
            .position(|h| h == "surgery_state")
            .ok_or_else(|| Error::file(path, "missing column 'surgery_state'"))?;
        let mut map = BTreeMap::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| csv_error(path, e))?;
            let state: u8 = row[state_col]
                .trim()
                .parse()
                .map_err(|_| Error::row(path, i + 2, format!("bad surgery_state '{}'", &row[state_col])))?;
            if state > 2 {
                return Err(Error::row(path, i + 2, format!("surgery_state {state} out of range 0..=2")));
            }
            map.insert(row[code_col].trim().to_string(), state);
        }
        self.thoracic_cpt_map = map;
        Ok(())
    }
}

/// Surgery state from an encounter's procedure codes: the maximum over the
/// mapped states, so a definitely-thoracic code dominates a might-be code.
pub fn encode_surgery(cpt_codes: &[&str], rules: &EncodingRules) -> u8 {
    cpt_codes
        .iter()
        .map(|code| rules.thoracic_cpt_map.get(*code).copied().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

/// 1 iff the reading is strictly below the configured threshold.
pub fn encode_hypotension(bp_mmhg: f64, rules: &EncodingRules) -> Result<u8> {
    if !(bp_mmhg > 0.0) {
        return Err(Error::Input(format!("non-positive BP reading {bp_mmhg}")));
    }
    Ok(u8::from(bp_mmhg < rules.hypotension_threshold_mmhg))
}

/// 1 iff any diagnosis code starts with the configured prefix.
pub fn encode_af(icd9_codes: &[&str], rules: &EncodingRules) -> u8 {
    u8::from(icd9_codes.iter().any(|c| c.starts_with(&rules.af_icd9_prefix)))
}

/// Reads an encounter CSV: a header of `encounter_id` plus the schema
/// variable codes in any column order, one encounter per row.
pub fn load_records(path: &Path, schema: &Schema) -> Result<Vec<EncounterRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let id_col = headers
        .iter()
        .position(|h| h == "encounter_id")
        .ok_or_else(|| Error::file(path, "missing column 'encounter_id'"))?;
    let mut columns = Vec::with_capacity(schema.len());
    for spec in schema.variables() {
        let col = headers
            .iter()
            .position(|h| h == spec.code)
            .ok_or_else(|| Error::file(path, format!("missing column '{}'", spec.code)))?;
        columns.push(col);
    }

    let mut seen_ids = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2; // 1-based, after the header
        let row = row.map_err(|e| csv_error(path, e))?;
        let id = row
            .get(id_col)
            .ok_or_else(|| Error::row(path, row_no, "short row"))?
            .to_string();
        if !seen_ids.insert(id.clone()) {
            return Err(Error::row(path, row_no, format!("duplicate encounter_id '{id}'")));
        }
        let mut values = Vec::with_capacity(schema.len());
        for (var, &col) in schema.variables().iter().zip(&columns) {
            let cell = row
                .get(col)
                .ok_or_else(|| Error::row(path, row_no, "short row"))?;
            if cell.is_empty() {
                return Err(Error::row(path, row_no, format!("blank value for '{}'", var.code)));
            }
            let value: u8 = cell.parse().map_err(|_| {
                Error::row(path, row_no, format!("non-integer value '{}' for '{}'", cell, var.code))
            })?;
            if value as usize >= var.cardinality() {
                return Err(Error::row(
                    path,
                    row_no,
                    format!(
                        "value {} out of range for '{}' (0..={})",
                        value,
                        var.code,
                        var.cardinality() - 1
                    ),
                ));
            }
            values.push(value);
        }
        records.push(EncounterRecord {
            encounter_id: id,
            values,
        });
    }
    Ok(records)
}

/// Writes records in canonical column order (`encounter_id` first, then the
/// schema variables in schema order).
pub fn write_records(path: &Path, schema: &Schema, records: &[EncounterRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["encounter_id".to_string()];
    header.extend(schema.variables().iter().map(|v| v.code.clone()));
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for record in records {
        let mut row = vec![record.encounter_id.clone()];
        row.extend(record.values.iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::file(path, e.to_string())
}
