use std::path::Path;

use cpmr_core::evaluation::{aggregate, AggregateReport, OutcomeCategory::*, PatternRates};
use cpmr_core::testkit::load_outcomes;
use cpmr_core::PatternId::{Cp1, Cp10, Cp4, Cp9};
use cpmr_core::{agreement, PatternId};

const EPS: f64 = 1e-9;

fn report() -> AggregateReport {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/aggregation/outcomes.csv");
    let observations = load_outcomes(&path).unwrap();
    assert_eq!(observations.len(), 40);
    aggregate(&observations)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS
}

/// correct, impl, app/id, critical, not identified, not derived; then
/// baseline, pipeline AAO == EAO, misidentified.
fn check(row: &PatternRates, cats: [f64; 6], baseline: f64, aao: f64, misid: f64) {
    let got = [
        row.category(CorrectBehaviour),
        row.category(IncorrectPatternImplementation),
        row.category(IncorrectApplicationOrIdentification),
        row.category(CriticalInconsistency),
        row.category(NotIdentified),
        row.category(MeaningNotDerived),
    ];
    for (g, want) in got.iter().zip(cats) {
        assert!(close(g.unwrap(), want), "{} {}: {got:?} vs {cats:?}", row.pattern, row.backend);
    }
    assert!(close(row.cpmr_correct.unwrap(), cats[0]));
    assert!(close(row.baseline_correct.unwrap(), baseline), "{} {}", row.pattern, row.backend);
    assert!(close(row.cpmr_aao_equals_eao.unwrap(), aao), "{} {}", row.pattern, row.backend);
    assert!(close(row.misidentified.unwrap(), misid), "{} {}", row.pattern, row.backend);
    assert!(close(row.categories.unwrap().iter().sum::<f64>(), 1.0));
}

fn rates<'a>(r: &'a AggregateReport, p: PatternId, b: &str) -> &'a PatternRates {
    r.rates_for(p, b).unwrap_or_else(|| panic!("no row {p} {b}"))
}

#[test]
fn replace_fragment_rates() {
    let r = report();
    check(rates(&r, Cp4, "alpha"), [0.4, 0.1, 0.1, 0.2, 0.1, 0.1], 0.5, 0.5, 0.3);
    check(rates(&r, Cp4, "beta"), [0.3, 0.1, 0.2, 0.1, 0.2, 0.1], 0.5, 0.5, 0.3);
    check(rates(&r, Cp4, "average"), [0.35, 0.1, 0.15, 0.15, 0.15, 0.1], 0.5, 0.5, 0.3);
}

#[test]
fn conditional_insert_rates() {
    let r = report();
    check(rates(&r, Cp10, "alpha"), [0.3, 0.1, 0.2, 0.2, 0.1, 0.1], 0.5, 0.5, 0.4);
    check(rates(&r, Cp10, "beta"), [0.4, 0.0, 0.2, 0.3, 0.1, 0.0], 0.6, 0.6, 0.5);
    check(rates(&r, Cp10, "average"), [0.35, 0.05, 0.2, 0.25, 0.1, 0.05], 0.55, 0.55, 0.45);
}

#[test]
fn predominant_alternatives_use_strict_ten_percent() {
    let r = report();
    // cp1 is exactly 10% on both backends and so not reported.
    assert_eq!(r.alternatives_for(Cp4), vec![Cp10]);
    let cp4 = r.alternatives.iter().find(|a| a.pattern == Cp4).unwrap();
    assert!(close(cp4.alternatives[0].1, 0.2));
    assert!(!r.alternatives_for(Cp4).contains(&Cp1));
    assert_eq!(r.alternatives_for(Cp10), vec![Cp4, Cp9]);
    let cp10 = r.alternatives.iter().find(|a| a.pattern == Cp10).unwrap();
    assert!(close(cp10.alternatives[0].1, 0.25) && close(cp10.alternatives[1].1, 0.2));
}

#[test]
fn reason_rollup() {
    let r = report();
    let x = r.rollup_for(Cp4).unwrap();
    assert!(close(x.no_failure, 0.35) && close(x.user, 0.25) && close(x.llm, 0.1) && close(x.pattern_ambiguity, 0.3));
    let x = r.rollup_for(Cp10).unwrap();
    assert!(close(x.no_failure, 0.35) && close(x.user, 0.15) && close(x.llm, 0.05) && close(x.pattern_ambiguity, 0.45));
    for row in &r.rollup {
        assert!(close(row.rollup.sum(), 1.0));
    }
}

#[test]
fn baseline_pipeline_agreement() {
    let r = report();
    for b in ["alpha", "beta", "average"] {
        assert!(close(r.agreement_for(b).unwrap(), 0.8), "{b}");
    }
    let v = |bits: [bool; 4]| bits.iter().enumerate().map(|(i, b)| (format!("r{i}"), *b)).collect::<Vec<_>>();
    assert_eq!(agreement(&v([true, true, false, false]), &v([true, false, false, true])), Ok(0.5));
}
