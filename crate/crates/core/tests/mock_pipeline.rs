use std::path::PathBuf;

use cpmr_core::evaluation::{aggregate_records, classify, load_survey, run_evaluation, OutcomeCategory};
use cpmr_core::pipeline::{Approach, Backend, Expected, MockBackend, Pipeline};
use cpmr_core::{similarity, PatternId};

fn survey_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/survey")
}

#[test]
fn every_pattern_reaches_correct_behaviour() {
    let records = load_survey(survey_dir()).unwrap();
    let covered: std::collections::BTreeSet<_> = records.iter().map(|r| r.pattern_expected).collect();
    assert_eq!(covered.len(), PatternId::ALL.len());

    let backend = MockBackend::new();
    let pipeline = Pipeline::new(&backend);
    for record in &records {
        let expected = Expected { pattern: Some(record.pattern_expected), eao: Some(record.eao.clone()) };
        let trace = pipeline.run_cpmr(&record.input_model, &record.wording, &expected).unwrap();
        assert_eq!(trace.flags(), "(T,T,T,T)", "{}: {:?}", record.id, trace.error);
        assert_eq!(classify(&trace), Ok(OutcomeCategory::CorrectBehaviour));
        assert!(similarity(trace.aao.as_ref().unwrap(), &record.eao).is_one(), "{}", record.id);
    }
}

#[test]
fn runs_are_deterministic() {
    let records = load_survey(survey_dir()).unwrap();
    let backend = MockBackend::new();
    let backends: [&dyn Backend; 1] = [&backend];
    let strip = |mut runs: Vec<cpmr_core::EvaluationRecord>| {
        for r in &mut runs {
            for run in &mut r.runs {
                run.baseline.iter_mut().chain(run.cpmr.iter_mut()).flat_map(|t| t.transcripts.iter_mut()).for_each(|t| t.elapsed_ms = 0);
            }
        }
        runs
    };
    let a = strip(run_evaluation(&records, &backends, &[Approach::Baseline, Approach::Cpmr]).unwrap());
    let b = strip(run_evaluation(&records, &backends, &[Approach::Baseline, Approach::Cpmr]).unwrap());
    assert_eq!(a, b);
    let report = aggregate_records(&a).unwrap();
    for row in report.rates.iter() {
        assert_eq!(row.cpmr_correct, Some(1.0), "{}", row.pattern);
    }
}
