// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::classify::{classify, ClassifyError, OutcomeCategory};
use super::{agreement, reason_rollup, EvaluationRecord, Rollup};
use crate::patterns::PatternId;

/// Backend column name of the cross-backend mean rows.
pub const AVERAGE: &str = "average";

/// Alternatives must exceed this share on every backend to be reported.
const ALTERNATIVE_THRESHOLD: f64 = 0.10;

/// Pipeline outcome of one (record, backend) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpmrOutcome {
    pub identified: Option<PatternId>,
    pub category: OutcomeCategory,
    pub aao_equals_eao: bool,
}

/// One (record, backend) cell; an approach that was not run is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub record_id: String,
    pub pattern: PatternId,
    pub backend: String,
    pub baseline_correct: Option<bool>,
    pub cpmr: Option<CpmrOutcome>,
}

pub fn observations(records: &[EvaluationRecord]) -> Result<Vec<Observation>, ClassifyError> {
    let mut out = Vec::new();
    for rec in records {
        for run in &rec.runs {
            let cpmr = match &run.cpmr {
                Some(trace) => Some(CpmrOutcome {
                    identified: trace.identified,
                    category: classify(trace)?,
                    aao_equals_eao: trace.step_3 == Some(true),
                }),
                None => None,
            };
            out.push(Observation {
                record_id: rec.record.id.clone(),
                pattern: rec.record.pattern_expected,
                backend: run.backend.clone(),
                baseline_correct: run.baseline.as_ref().map(|t| t.step_3 == Some(true)),
                cpmr,
            });
        }
    }
    Ok(out)
}

/// Shares for one pattern on one backend. Columns of an approach that was
/// not run are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternRates {
    pub pattern: PatternId,
    pub backend: String,
    pub n: usize,
    /// Baseline AAO == EAO.
    pub baseline_correct: Option<f64>,
    /// Pipeline run ending in correct behaviour.
    pub cpmr_correct: Option<f64>,
    /// Pipeline AAO == EAO regardless of identification.
    pub cpmr_aao_equals_eao: Option<f64>,
    /// Identified a pattern other than the expected one.
    pub misidentified: Option<f64>,
    /// Shares in `OutcomeCategory::ALL` order.
    pub categories: Option<[f64; 6]>,
}

fn share<T>(items: &[T], hit: impl Fn(&T) -> bool) -> Option<f64> {
    (!items.is_empty()).then(|| items.iter().filter(|x| hit(x)).count() as f64 / items.len() as f64)
}

/// Mean of the present values; `None` when no row has one.
fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

impl PatternRates {
    pub fn category(&self, category: OutcomeCategory) -> Option<f64> {
        let i = OutcomeCategory::ALL.iter().position(|c| *c == category).expect("closed set");
        self.categories.map(|c| c[i])
    }

    fn from_cell(pattern: PatternId, backend: &str, cell: &[&Observation]) -> Self {
        let baseline: Vec<bool> = cell.iter().filter_map(|o| o.baseline_correct).collect();
        let cpmr: Vec<CpmrOutcome> = cell.iter().filter_map(|o| o.cpmr).collect();
        let categories = (!cpmr.is_empty())
            .then(|| OutcomeCategory::ALL.map(|c| share(&cpmr, |o| o.category == c).expect("non-empty")));
        PatternRates {
            pattern,
            backend: backend.to_string(),
            n: cell.len(),
            baseline_correct: share(&baseline, |b| *b),
            cpmr_correct: share(&cpmr, |o| o.category == OutcomeCategory::CorrectBehaviour),
            cpmr_aao_equals_eao: share(&cpmr, |o| o.aao_equals_eao),
            misidentified: share(&cpmr, |o| o.identified.is_some_and(|p| p != pattern)),
            categories,
        }
    }

    fn mean(rows: &[PatternRates]) -> Self {
        let with_categories: Vec<[f64; 6]> = rows.iter().filter_map(|r| r.categories).collect();
        let categories = (!with_categories.is_empty()).then(|| {
            std::array::from_fn(|i| with_categories.iter().map(|c| c[i]).sum::<f64>() / with_categories.len() as f64)
        });
        PatternRates {
            pattern: rows[0].pattern,
            backend: AVERAGE.to_string(),
            n: rows.iter().map(|r| r.n).sum(),
            baseline_correct: mean_of(rows.iter().map(|r| r.baseline_correct)),
            cpmr_correct: mean_of(rows.iter().map(|r| r.cpmr_correct)),
            cpmr_aao_equals_eao: mean_of(rows.iter().map(|r| r.cpmr_aao_equals_eao)),
            misidentified: mean_of(rows.iter().map(|r| r.misidentified)),
            categories,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredominantAlternative {
    pub pattern: PatternId,
    /// Mean share per alternative across backends, largest first.
    pub alternatives: Vec<(PatternId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollupRow {
    pub pattern: PatternId,
    pub rollup: Rollup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub backend: String,
    pub n: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub backends: Vec<String>,
    /// Per pattern: one row per backend followed by the average row.
    pub rates: Vec<PatternRates>,
    pub alternatives: Vec<PredominantAlternative>,
    /// Backend-averaged reason shares per pattern.
    pub rollup: Vec<RollupRow>,
    /// One row per backend followed by the average row.
    pub agreement: Vec<AgreementRow>,
}

impl AggregateReport {
    pub fn rates_for(&self, pattern: PatternId, backend: &str) -> Option<&PatternRates> {
        self.rates.iter().find(|r| r.pattern == pattern && r.backend == backend)
    }

    pub fn alternatives_for(&self, pattern: PatternId) -> Vec<PatternId> {
        self.alternatives
            .iter()
            .find(|a| a.pattern == pattern)
            .map(|a| a.alternatives.iter().map(|(p, _)| *p).collect())
            .unwrap_or_default()
    }

    pub fn rollup_for(&self, pattern: PatternId) -> Option<&Rollup> {
        self.rollup.iter().find(|r| r.pattern == pattern).map(|r| &r.rollup)
    }

    pub fn agreement_for(&self, backend: &str) -> Option<f64> {
        self.agreement.iter().find(|r| r.backend == backend).map(|r| r.rate)
    }
}

pub fn aggregate_records(records: &[EvaluationRecord]) -> Result<AggregateReport, ClassifyError> {
    Ok(aggregate(&observations(records)?))
}

/// Folds observations into report tables. Result does not depend on input
/// order: backends and patterns are emitted sorted.
pub fn aggregate(observations: &[Observation]) -> AggregateReport {
    let backends: Vec<String> =
        observations.iter().map(|o| o.backend.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut cells: BTreeMap<(PatternId, &str), Vec<&Observation>> = BTreeMap::new();
    for o in observations {
        cells.entry((o.pattern, o.backend.as_str())).or_default().push(o);
    }
    let patterns: BTreeSet<PatternId> = observations.iter().map(|o| o.pattern).collect();

    let mut rates = Vec::new();
    let mut alternatives = Vec::new();
    let mut rollup = Vec::new();
    for &pattern in &patterns {
        let per_backend: Vec<(&str, &Vec<&Observation>)> = backends
            .iter()
            .filter_map(|b| cells.get(&(pattern, b.as_str())).map(|cell| (b.as_str(), cell)))
            .collect();

        let rows: Vec<PatternRates> =
            per_backend.iter().map(|(b, cell)| PatternRates::from_cell(pattern, b, cell)).collect();
        let mean = PatternRates::mean(&rows);
        rates.extend(rows);
        rates.push(mean);

        if let Some(found) = predominant(pattern, &per_backend) {
            alternatives.push(found);
        }

        let rollups: Vec<Rollup> = per_backend
            .iter()
            .map(|(_, cell)| cell.iter().filter_map(|o| o.cpmr.map(|c| c.category)).collect::<Vec<_>>())
            .filter(|categories| !categories.is_empty())
            .map(|categories| reason_rollup(&categories))
            .collect();
        if rollups.is_empty() {
            continue;
        }
        let k = rollups.len() as f64;
        let avg = |f: fn(&Rollup) -> f64| rollups.iter().map(f).sum::<f64>() / k;
        rollup.push(RollupRow {
            pattern,
            rollup: Rollup {
                n: rollups.iter().map(|r| r.n).sum(),
                no_failure: avg(|r| r.no_failure),
                user: avg(|r| r.user),
                llm: avg(|r| r.llm),
                pattern_ambiguity: avg(|r| r.pattern_ambiguity),
            },
        });
    }

    let mut agreement_rows = Vec::new();
    for backend in &backends {
        let pairs: Vec<(String, bool, bool)> = observations
            .iter()
            .filter(|o| &o.backend == backend)
            .filter_map(|o| Some((o.record_id.clone(), o.baseline_correct?, o.cpmr?.aao_equals_eao)))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let base: Vec<(String, bool)> = pairs.iter().map(|(id, b, _)| (id.clone(), *b)).collect();
        let cpmr: Vec<(String, bool)> = pairs.iter().map(|(id, _, c)| (id.clone(), *c)).collect();
        let rate = agreement(&base, &cpmr).expect("same ids on both sides by construction");
        agreement_rows.push(AgreementRow { backend: backend.clone(), n: pairs.len(), rate });
    }
    if !agreement_rows.is_empty() {
        let k = agreement_rows.len() as f64;
        agreement_rows.push(AgreementRow {
            backend: AVERAGE.to_string(),
            n: agreement_rows.iter().map(|r| r.n).sum(),
            rate: agreement_rows.iter().map(|r| r.rate).sum::<f64>() / k,
        });
    }

    AggregateReport { backends, rates, alternatives, rollup, agreement: agreement_rows }
}

/// Alternatives predicted for more than 10% of the pattern's records by
/// every backend that saw the pattern.
fn predominant(pattern: PatternId, per_backend: &[(&str, &Vec<&Observation>)]) -> Option<PredominantAlternative> {
    let mut found = Vec::new();
    for alt in PatternId::ALL.into_iter().filter(|p| *p != pattern) {
        let shares: Vec<f64> = per_backend
            .iter()
            .filter_map(|(_, cell)| {
                let cpmr: Vec<CpmrOutcome> = cell.iter().filter_map(|o| o.cpmr).collect();
                share(&cpmr, |o| o.identified == Some(alt))
            })
            .collect();
        if shares.is_empty() {
            return None;
        }
        if shares.iter().all(|s| *s > ALTERNATIVE_THRESHOLD) {
            found.push((alt, shares.iter().sum::<f64>() / shares.len() as f64));
        }
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    (!found.is_empty()).then_some(PredominantAlternative { pattern, alternatives: found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use OutcomeCategory::*;

    fn obs(id: &str, pattern: PatternId, backend: &str, identified: Option<PatternId>, category: OutcomeCategory) -> Observation {
        Observation {
            record_id: id.into(),
            pattern,
            backend: backend.into(),
            baseline_correct: Some(category == CorrectBehaviour),
            cpmr: Some(CpmrOutcome {
                identified,
                category,
                aao_equals_eao: matches!(category, CorrectBehaviour | IncorrectApplicationOrIdentification),
            }),
        }
    }

    #[test]
    fn single_backend_average_equals_row() {
        let data = vec![
            obs("1", PatternId::Cp1, "m", Some(PatternId::Cp1), CorrectBehaviour),
            obs("2", PatternId::Cp1, "m", None, NotIdentified),
        ];
        let report = aggregate(&data);
        let row = report.rates_for(PatternId::Cp1, "m").unwrap();
        let avg = report.rates_for(PatternId::Cp1, AVERAGE).unwrap();
        assert_eq!(row.cpmr_correct, Some(0.5));
        assert_eq!(
            (row.baseline_correct, row.cpmr_correct, row.categories, row.misidentified),
            (avg.baseline_correct, avg.cpmr_correct, avg.categories, avg.misidentified)
        );
        assert_eq!(report.agreement_for("m"), report.agreement_for(AVERAGE));
    }

    #[test]
    fn no_misidentification_no_alternative() {
        let data = vec![
            obs("1", PatternId::Cp2, "a", Some(PatternId::Cp2), CorrectBehaviour),
            obs("1", PatternId::Cp2, "b", None, NotIdentified),
        ];
        assert!(aggregate(&data).alternatives.is_empty());
    }

    #[test]
    fn alternative_needs_every_backend() {
        let mut data = Vec::new();
        for i in 0..10 {
            let alt_a = if i < 2 { Some(PatternId::Cp4) } else { Some(PatternId::Cp3) };
            let alt_b = if i < 1 { Some(PatternId::Cp4) } else { Some(PatternId::Cp3) };
            let cat = |p: Option<PatternId>| if p == Some(PatternId::Cp3) { CorrectBehaviour } else { CriticalInconsistency };
            data.push(obs(&i.to_string(), PatternId::Cp3, "a", alt_a, cat(alt_a)));
            data.push(obs(&i.to_string(), PatternId::Cp3, "b", alt_b, cat(alt_b)));
        }
        // 20% on a, exactly 10% on b: not strictly above the threshold.
        assert!(aggregate(&data).alternatives.is_empty());
        data[3] = obs("1", PatternId::Cp3, "b", Some(PatternId::Cp4), CriticalInconsistency);
        assert_eq!(aggregate(&data).alternatives_for(PatternId::Cp3), vec![PatternId::Cp4]);
    }

    #[test]
    fn permutation_invariant() {
        let mut data = vec![
            obs("1", PatternId::Cp1, "x", Some(PatternId::Cp1), CorrectBehaviour),
            obs("2", PatternId::Cp5, "y", Some(PatternId::Cp9), CriticalInconsistency),
            obs("3", PatternId::Cp1, "y", None, NotIdentified),
            obs("4", PatternId::Cp5, "x", Some(PatternId::Cp5), IncorrectPatternImplementation),
        ];
        let a = aggregate(&data);
        data.reverse();
        assert_eq!(a, aggregate(&data));
    }
}

#[cfg(test)]
mod single_approach {
    use super::*;

    #[test]
    fn baseline_only_has_no_pipeline_tables() {
        let data = vec![
            Observation { record_id: "1".into(), pattern: PatternId::Cp1, backend: "m".into(), baseline_correct: Some(true), cpmr: None },
            Observation { record_id: "2".into(), pattern: PatternId::Cp1, backend: "m".into(), baseline_correct: Some(false), cpmr: None },
        ];
        let report = aggregate(&data);
        let row = report.rates_for(PatternId::Cp1, "m").unwrap();
        assert_eq!(row.baseline_correct, Some(0.5));
        assert_eq!((row.cpmr_correct, row.categories), (None, None));
        assert!(report.rollup.is_empty() && report.agreement.is_empty() && report.alternatives.is_empty());
    }
}
