use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use cpmr_core::patterns::StructuredMeaning;
use cpmr_core::testkit::load_golden_dir;
use cpmr_core::{apply_pattern, parse_dsl, serialize_dsl, PatternId};

fn corpus() -> Vec<cpmr_core::testkit::GoldenCase> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/golden");
    load_golden_dir(&dir).expect("golden corpus loads")
}

#[test]
fn every_case_matches_byte_for_byte() {
    let started = Instant::now();
    let cases = corpus();
    let mut failures = Vec::new();
    for case in &cases {
        let input = parse_dsl(&case.input).unwrap_or_else(|e| panic!("{}: input: {e}", case.name));
        let meaning = StructuredMeaning::from_json(&case.meaning).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        match apply_pattern(&input, &meaning) {
            Ok(out) if serialize_dsl(&out) == case.expected => {}
            Ok(out) => failures.push(format!("{}:\n{}", case.name, serialize_dsl(&out))),
            Err(e) => failures.push(format!("{}: {e}", case.name)),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
    assert!(started.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn at_least_two_cases_per_pattern() {
    let cases = corpus();
    assert!(cases.len() >= 38);
    let mut per: BTreeMap<PatternId, usize> = BTreeMap::new();
    for case in &cases {
        *per.entry(StructuredMeaning::from_json(&case.meaning).unwrap().pattern()).or_default() += 1;
    }
    for id in PatternId::ALL {
        assert!(per.get(&id).copied().unwrap_or(0) >= 2, "{id} has fewer than two cases");
    }
}

#[test]
fn corpus_texts_are_canonical() {
    for case in corpus() {
        for text in [&case.input, &case.expected] {
            let model = parse_dsl(text).unwrap_or_else(|e| panic!("{}: {e}", case.name));
            assert_eq!(&serialize_dsl(&model), text, "{}", case.name);
        }
    }
}
