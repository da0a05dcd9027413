// SPDX-License-Identifier: Apache-2.0

//! Outcome classification, survey ingestion, batch runs and the aggregate
//! tables built from them.

mod aggregate;
mod classify;
mod report;
mod survey;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{Approach, Backend, BackendError, Expected, Pipeline, PipelineTrace};

pub use aggregate::{
    aggregate, aggregate_records, observations, AggregateReport, AgreementRow, CpmrOutcome, Observation, PatternRates,
    PredominantAlternative, RollupRow, AVERAGE,
};
pub use classify::{classify, classify_flags, ClassifyError, OutcomeCategory, Reason};
pub use report::{render_text, write_csv_reports, ReportFormat, CSV_FILES};
pub use survey::{load_survey, SurveyError, SurveyRecord, RECORDS_FILE};

/// Reason shares for one group of classified records.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rollup {
    pub n: usize,
    pub no_failure: f64,
    pub user: f64,
    pub llm: f64,
    pub pattern_ambiguity: f64,
}

impl Rollup {
    pub fn get(&self, reason: Reason) -> f64 {
        match reason {
            Reason::NoFailure => self.no_failure,
            Reason::User => self.user,
            Reason::Llm => self.llm,
            Reason::PatternAmbiguity => self.pattern_ambiguity,
        }
    }

    pub fn sum(&self) -> f64 {
        self.no_failure + self.user + self.llm + self.pattern_ambiguity
    }
}

/// Empty input yields all-zero shares with `n == 0`.
pub fn reason_rollup(categories: &[OutcomeCategory]) -> Rollup {
    let n = categories.len();
    if n == 0 {
        return Rollup::default();
    }
    let share = |r: Reason| categories.iter().filter(|c| c.reason() == r).count() as f64 / n as f64;
    Rollup {
        n,
        no_failure: share(Reason::NoFailure),
        user: share(Reason::User),
        llm: share(Reason::Llm),
        pattern_ambiguity: share(Reason::PatternAmbiguity),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgreementError {
    #[error("baseline and pipeline verdicts cover different record ids")]
    IdMismatch,
    #[error("no verdicts to compare")]
    EmptyInput,
}

/// Fraction of records on which both approaches reach the same AAO == EAO
/// verdict. Order of the two slices does not matter; ids must match.
pub fn agreement(baseline: &[(String, bool)], cpmr: &[(String, bool)]) -> Result<f64, AgreementError> {
    if baseline.is_empty() && cpmr.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let sorted = |v: &[(String, bool)]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    let (a, b) = (sorted(baseline), sorted(cpmr));
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.0 != y.0) {
        return Err(AgreementError::IdMismatch);
    }
    if a.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(AgreementError::IdMismatch);
    }
    let same = a.iter().zip(&b).filter(|(x, y)| x.1 == y.1).count();
    Ok(same as f64 / a.len() as f64)
}

/// The approaches run by one backend on one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordRun {
    pub backend: String,
    pub baseline: Option<PipelineTrace>,
    pub cpmr: Option<PipelineTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationRecord {
    pub record: SurveyRecord,
    pub runs: Vec<RecordRun>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("record {record_id} on backend {backend}: {error}")]
pub struct EvalError {
    pub record_id: String,
    pub backend: String,
    pub error: BackendError,
}

/// Runs each of `approaches` for every record on every backend. Records are
/// processed in parallel; output order follows input order. The first backend
/// failure aborts the run.
pub fn run_evaluation(
    records: &[SurveyRecord],
    backends: &[&dyn Backend],
    approaches: &[Approach],
) -> Result<Vec<EvaluationRecord>, EvalError> {
    records
        .par_iter()
        .map(|record| {
            let expected = Expected { pattern: Some(record.pattern_expected), eao: Some(record.eao.clone()) };
            let runs = backends
                .iter()
                .map(|backend| {
                    let pipeline = Pipeline::new(*backend);
                    let fail = |e: crate::pipeline::RunFailure| EvalError {
                        record_id: record.id.clone(),
                        backend: backend.name().to_string(),
                        error: e.error,
                    };
                    let baseline = match approaches.contains(&Approach::Baseline) {
                        true => Some(
                            pipeline
                                .run_baseline(&record.input_model, &record.wording, Some(&record.eao))
                                .map_err(fail)?,
                        ),
                        false => None,
                    };
                    let cpmr = match approaches.contains(&Approach::Cpmr) {
                        true => Some(pipeline.run_cpmr(&record.input_model, &record.wording, &expected).map_err(fail)?),
                        false => None,
                    };
                    Ok(RecordRun { backend: backend.name().to_string(), baseline, cpmr })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(EvaluationRecord { record: record.clone(), runs })
        })
        .collect()
}
