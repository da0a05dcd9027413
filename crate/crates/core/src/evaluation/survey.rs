// SPDX-License-Identifier: Apache-2.0

//! Survey directories: `records.csv` plus the `.cpm` files it references.
//!
//! ```text
//! record_id,pattern_expected,wording,input_model,eao_model
//! r01,cp1,"Add task C after task B",base.cpm,r01_eao.cpm
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dsl::parse_dsl;
use crate::model::ProcessModel;
use crate::patterns::PatternId;
use crate::pipeline::Wording;

pub const RECORDS_FILE: &str = "records.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyRecord {
    pub id: String,
    pub pattern_expected: PatternId,
    pub wording: Wording,
    pub input_ref: String,
    pub input_model: ProcessModel,
    pub eao_ref: String,
    pub eao: ProcessModel,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurveyError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("records.csv line {line}: {message}")]
    BadCsv { line: u64, message: String },
    #[error("model {reference}: {message}")]
    InvalidModel { reference: String, message: String },
}

#[derive(Deserialize)]
struct Row {
    record_id: String,
    pattern_expected: String,
    wording: String,
    input_model: String,
    eao_model: String,
}

struct Models<'a> {
    dir: &'a Path,
    cache: HashMap<String, ProcessModel>,
}

impl Models<'_> {
    fn load(&mut self, reference: &str) -> Result<ProcessModel, SurveyError> {
        if let Some(model) = self.cache.get(reference) {
            return Ok(model.clone());
        }
        let path = self.dir.join(reference);
        let text = std::fs::read_to_string(&path).map_err(|_| SurveyError::MissingFile(path.clone()))?;
        let model = parse_dsl(&text)
            .map_err(|e| SurveyError::InvalidModel { reference: reference.to_string(), message: e.to_string() })?;
        self.cache.insert(reference.to_string(), model.clone());
        Ok(model)
    }
}

pub fn load_survey(dir: impl AsRef<Path>) -> Result<Vec<SurveyRecord>, SurveyError> {
    let dir = dir.as_ref();
    let csv_path = dir.join(RECORDS_FILE);
    let file = std::fs::File::open(&csv_path).map_err(|_| SurveyError::MissingFile(csv_path.clone()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::Fields).from_reader(file);
    let mut models = Models { dir, cache: HashMap::new() };
    let mut records = Vec::new();
    let mut seen = HashMap::new();

    let headers = reader
        .headers()
        .map_err(|e| SurveyError::BadCsv { line: 1, message: e.to_string() })?
        .clone();
    let mut raw = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut raw).map_err(|e| SurveyError::BadCsv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = raw.position().map(|p| p.line()).unwrap_or(0);
        let row: Row =
            raw.deserialize(Some(&headers)).map_err(|e| SurveyError::BadCsv { line, message: e.to_string() })?;
        let bad = |message: String| SurveyError::BadCsv { line, message };
        if row.record_id.is_empty() {
            return Err(bad("empty record_id".into()));
        }
        if let Some(first) = seen.insert(row.record_id.clone(), line) {
            return Err(bad(format!("record_id '{}' already used on line {first}", row.record_id)));
        }
        let pattern_expected: PatternId = row.pattern_expected.parse().map_err(|e| bad(format!("{e}")))?;
        let wording = Wording::new(&row.wording).map_err(|e| bad(e.to_string()))?;
        let input_model = models.load(&row.input_model)?;
        let eao = models.load(&row.eao_model)?;
        records.push(SurveyRecord {
            id: row.record_id,
            pattern_expected,
            wording,
            input_ref: row.input_model,
            input_model,
            eao_ref: row.eao_model,
            eao,
        });
    }
    Ok(records)
}
