// SPDX-License-Identifier: Apache-2.0

//! Identify → derive → apply over a pluggable backend, plus the single-shot
//! baseline.

mod backend;
mod llm;
mod mock;
pub mod prompts;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use backend::{
    Backend, BackendConfig, BackendError, BackendKind, ConfigError, Stage, StageContext, StageRequest, ENV_API_KEY,
    ENV_ENDPOINT, ENV_MODEL, ENV_TIMEOUT_SECS,
};
pub use llm::LlmBackend;
pub use mock::{derive as mock_derive, identify as mock_identify, MockBackend, NA};

use crate::dsl::{parse_dsl, serialize_dsl, DslError};
use crate::model::{Diagnostic, ProcessModel};
use crate::patterns::{catalog, render_meaning_nl, PatternCatalog, PatternId, StructuredMeaning};
use crate::similarity::models_equal;
use prompts::{apply_prompt, derive_prompt, identify_prompt, Prompt};

/// A single, trimmed, non-empty redesign request.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Wording(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("wording must not be empty")]
pub struct EmptyWording;

impl Wording {
    pub fn new(text: impl AsRef<str>) -> Result<Self, EmptyWording> {
        let text = text.as_ref().trim();
        if text.is_empty() {
            Err(EmptyWording)
        } else {
            Ok(Wording(text.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Wording {
    type Error = EmptyWording;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Wording::new(value)
    }
}

impl From<Wording> for String {
    fn from(w: Wording) -> String {
        w.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Meaning {
    Structured(StructuredMeaning),
    NaturalLanguage(String),
}

impl Meaning {
    /// Text handed to the Apply prompt.
    pub fn to_text(&self) -> String {
        match self {
            Meaning::Structured(m) => render_meaning_nl(m),
            Meaning::NaturalLanguage(text) => text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Baseline,
    Cpmr,
}

impl std::str::FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" => Ok(Approach::Baseline),
            "cpmr" => Ok(Approach::Cpmr),
            other => Err(format!("unknown mode '{other}' (expected baseline or cpmr)")),
        }
    }
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Approach::Baseline => "baseline",
            Approach::Cpmr => "cpmr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub stage: Stage,
    pub request: Prompt,
    pub response: String,
    pub elapsed_ms: u64,
}

impl TranscriptEntry {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("transcripts always serialize")
    }
}

/// Known ground truth for a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expected {
    pub pattern: Option<PatternId>,
    pub eao: Option<ProcessModel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub approach: Approach,
    pub wording: String,
    pub step_1a: bool,
    pub identified: Option<PatternId>,
    pub step_1b: Option<bool>,
    pub step_2: Option<bool>,
    pub meaning: Option<Meaning>,
    pub step_3: Option<bool>,
    pub aao: Option<ProcessModel>,
    pub error: Option<String>,
    pub transcripts: Vec<TranscriptEntry>,
}

impl PipelineTrace {
    fn new(approach: Approach, wording: &Wording) -> Self {
        PipelineTrace {
            approach,
            wording: wording.as_str().to_string(),
            step_1a: false,
            identified: None,
            step_1b: None,
            step_2: None,
            meaning: None,
            step_3: None,
            aao: None,
            error: None,
            transcripts: Vec::new(),
        }
    }

    /// Short-circuit shape: later steps exist only after earlier successes.
    pub fn shape_ok(&self) -> bool {
        match self.approach {
            Approach::Cpmr => {
                (self.step_1a || (self.step_1b.is_none() && self.step_2.is_none()))
                    && (self.step_2 == Some(true) || self.step_3.is_none())
                    && self.step_1a == self.identified.is_some()
            }
            Approach::Baseline => !self.step_1a && self.step_1b.is_none() && self.step_2.is_none(),
        }
    }

    /// `(T,T,T,F)`-style rendering; `·` marks an absent step.
    pub fn flags(&self) -> String {
        let b = |v: Option<bool>| match v {
            Some(true) => "T",
            Some(false) => "F",
            None => "·",
        };
        match self.approach {
            Approach::Cpmr => {
                format!("({},{},{},{})", b(Some(self.step_1a)), b(self.step_1b), b(self.step_2), b(self.step_3))
            }
            Approach::Baseline => format!("({})", b(self.step_3)),
        }
    }

    pub fn transcript_lines(&self) -> String {
        self.transcripts.iter().map(|t| t.to_json_line() + "\n").collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("backend output is not a model: {0}")]
    UnparseableOutput(String),
    #[error("backend output is an ill-formed model: {0:?}")]
    InvalidModelOutput(Vec<Diagnostic>),
}

/// A backend failure together with everything recorded before it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: BackendError,
    pub partial: Box<PipelineTrace>,
}

pub struct Pipeline<'a> {
    backend: &'a dyn Backend,
    catalog: PatternCatalog,
}

impl<'a> Pipeline<'a> {
    pub fn new(backend: &'a dyn Backend) -> Self {
        Pipeline { backend, catalog: catalog() }
    }

    pub fn with_catalog(backend: &'a dyn Backend, catalog: PatternCatalog) -> Self {
        assert!(!catalog.is_empty(), "catalog must not be empty");
        Pipeline { backend, catalog }
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    fn call(&self, request: StageRequest, log: &mut Vec<TranscriptEntry>) -> Result<String, BackendError> {
        let started = Instant::now();
        let response = self.backend.complete(&request)?;
        log.push(TranscriptEntry {
            stage: request.stage,
            request: request.prompt,
            response: response.clone(),
            elapsed_ms: started.elapsed().as_millis() as u64,
        });
        Ok(response)
    }

    /// `None` when the backend answers "NA" or anything other than a bare
    /// catalog id.
    pub fn identify(&self, wording: &Wording, log: &mut Vec<TranscriptEntry>) -> Result<Option<PatternId>, BackendError> {
        let request = StageRequest {
            stage: Stage::Identify,
            prompt: identify_prompt(&self.catalog, wording.as_str()),
            context: StageContext {
                wording: Some(wording.as_str().to_string()),
                catalog: self.catalog.entries().iter().map(|e| e.id).collect(),
                ..Default::default()
            },
        };
        let reply = self.call(request, log)?;
        let reply = reply.trim().trim_end_matches('.');
        Ok(reply.parse::<PatternId>().ok().filter(|id| self.catalog.contains(*id)))
    }

    /// `None` when the backend answers "NA" (or nothing).
    pub fn derive(
        &self,
        pattern: PatternId,
        wording: &Wording,
        log: &mut Vec<TranscriptEntry>,
    ) -> Result<Option<Meaning>, BackendError> {
        let entry = self.catalog.get(pattern).expect("pattern comes from the catalog");
        let request = StageRequest {
            stage: Stage::Derive,
            prompt: derive_prompt(entry, wording.as_str()),
            context: StageContext { wording: Some(wording.as_str().to_string()), pattern: Some(pattern), ..Default::default() },
        };
        let reply = self.call(request, log)?;
        let reply = reply.trim();
        if reply.is_empty() || reply.trim_matches(|c| c == '"' || c == '.').eq_ignore_ascii_case(NA) {
            return Ok(None);
        }
        Ok(Some(match StructuredMeaning::from_json(reply) {
            Ok(m) => Meaning::Structured(m),
            Err(_) => Meaning::NaturalLanguage(reply.to_string()),
        }))
    }

    pub fn apply(
        &self,
        model: &ProcessModel,
        meaning: &Meaning,
        log: &mut Vec<TranscriptEntry>,
    ) -> Result<ProcessModel, ApplyError> {
        let request = StageRequest {
            stage: Stage::Apply,
            prompt: apply_prompt(&serialize_dsl(model), &meaning.to_text()),
            context: StageContext { model: Some(model.clone()), meaning: Some(meaning.clone()), ..Default::default() },
        };
        parse_output(&self.call(request, log)?)
    }

    fn apply_wording(
        &self,
        model: &ProcessModel,
        wording: &Wording,
        log: &mut Vec<TranscriptEntry>,
    ) -> Result<ProcessModel, ApplyError> {
        let request = StageRequest {
            stage: Stage::Baseline,
            prompt: apply_prompt(&serialize_dsl(model), wording.as_str()),
            context: StageContext {
                wording: Some(wording.as_str().to_string()),
                model: Some(model.clone()),
                ..Default::default()
            },
        };
        parse_output(&self.call(request, log)?)
    }

    pub fn run_cpmr(
        &self,
        model: &ProcessModel,
        wording: &Wording,
        expected: &Expected,
    ) -> Result<PipelineTrace, RunFailure> {
        let mut trace = PipelineTrace::new(Approach::Cpmr, wording);
        let fail = |error: BackendError, trace: PipelineTrace| RunFailure { error, partial: Box::new(trace) };

        let identified = match self.identify(wording, &mut trace.transcripts) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, trace)),
        };
        let Some(pattern) = identified else {
            trace.error = Some("pattern not identified".into());
            return Ok(trace);
        };
        trace.step_1a = true;
        trace.identified = Some(pattern);
        trace.step_1b = expected.pattern.map(|p| p == pattern);

        let meaning = match self.derive(pattern, wording, &mut trace.transcripts) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, trace)),
        };
        let Some(meaning) = meaning else {
            trace.step_2 = Some(false);
            trace.error = Some("meaning not derived".into());
            return Ok(trace);
        };
        trace.step_2 = Some(true);
        trace.meaning = Some(meaning.clone());

        match self.apply(model, &meaning, &mut trace.transcripts) {
            Ok(aao) => {
                trace.step_3 = expected.eao.as_ref().map(|eao| models_equal(&aao, eao));
                trace.aao = Some(aao);
            }
            Err(ApplyError::Backend(e)) => return Err(fail(e, trace)),
            Err(e) => {
                trace.step_3 = expected.eao.as_ref().map(|_| false);
                trace.error = Some(e.to_string());
            }
        }
        Ok(trace)
    }

    pub fn run_baseline(
        &self,
        model: &ProcessModel,
        wording: &Wording,
        eao: Option<&ProcessModel>,
    ) -> Result<PipelineTrace, RunFailure> {
        let mut trace = PipelineTrace::new(Approach::Baseline, wording);
        match self.apply_wording(model, wording, &mut trace.transcripts) {
            Ok(aao) => {
                trace.step_3 = eao.map(|eao| models_equal(&aao, eao));
                trace.aao = Some(aao);
            }
            Err(ApplyError::Backend(error)) => return Err(RunFailure { error, partial: Box::new(trace) }),
            Err(e) => {
                trace.step_3 = eao.map(|_| false);
                trace.error = Some(e.to_string());
            }
        }
        Ok(trace)
    }

    pub fn run(
        &self,
        approach: Approach,
        model: &ProcessModel,
        wording: &Wording,
        expected: &Expected,
    ) -> Result<PipelineTrace, RunFailure> {
        match approach {
            Approach::Cpmr => self.run_cpmr(model, wording, expected),
            Approach::Baseline => self.run_baseline(model, wording, expected.eao.as_ref()),
        }
    }
}

fn parse_output(text: &str) -> Result<ProcessModel, ApplyError> {
    match parse_dsl(text) {
        Ok(model) => Ok(model),
        Err(DslError::Invalid(diagnostics)) => Err(ApplyError::InvalidModelOutput(diagnostics)),
        Err(e) => Err(ApplyError::UnparseableOutput(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::model::Fragment;
    use crate::patterns::{apply_pattern, Position};

    fn t(label: &str) -> Fragment {
        Fragment::task(label)
    }

    fn seq(labels: &[&str]) -> ProcessModel {
        ProcessModel::new("P", labels.iter().map(|l| t(l)).collect())
    }

    fn w(text: &str) -> Wording {
        Wording::new(text).unwrap()
    }

    /// Replies with fixed text per stage and records requests.
    struct Scripted {
        replies: Vec<(Stage, Result<String, BackendError>)>,
        seen: Mutex<Vec<StageRequest>>,
    }

    impl Scripted {
        fn new(replies: Vec<(Stage, Result<&str, BackendError>)>) -> Self {
            Scripted {
                replies: replies.into_iter().map(|(s, r)| (s, r.map(str::to_string))).collect(),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl Backend for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }

        fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
            self.seen.lock().unwrap().push(request.clone());
            self.replies.iter().find(|(s, _)| *s == request.stage).map(|(_, r)| r.clone()).unwrap_or(Ok(NA.into()))
        }
    }

    #[test]
    fn wording_is_trimmed_and_non_empty() {
        assert_eq!(w("  Add task C  ").as_str(), "Add task C");
        assert_eq!(Wording::new("   "), Err(EmptyWording));
    }

    #[test]
    fn identify_examples() {
        let mock = MockBackend::new();
        let p = Pipeline::new(&mock);
        let mut log = Vec::new();
        assert_eq!(p.identify(&w("Add task C after task B"), &mut log).unwrap(), Some(PatternId::Cp1));
        assert_eq!(p.identify(&w("I don't know"), &mut log).unwrap(), None);
        let chatty = Scripted::new(vec![(Stage::Identify, Ok("cp3 because the user moves a task"))]);
        assert_eq!(Pipeline::new(&chatty).identify(&w("Move B"), &mut log).unwrap(), None);
        let terse = Scripted::new(vec![(Stage::Identify, Ok(" cp3\n"))]);
        assert_eq!(Pipeline::new(&terse).identify(&w("Move B"), &mut log).unwrap(), Some(PatternId::Cp3));
        assert_eq!(log.len(), 4);
    }

    #[test]
    fn derive_examples() {
        let mock = MockBackend::new();
        let p = Pipeline::new(&mock);
        let mut log = Vec::new();
        assert_eq!(
            p.derive(PatternId::Cp1, &w("Add task C after task B"), &mut log).unwrap(),
            Some(Meaning::Structured(StructuredMeaning::Insert { new_label: "C".into(), position: Position::after("B") }))
        );
        assert_eq!(p.derive(PatternId::Cp1, &w("Add task E"), &mut log).unwrap(), None);
        assert_eq!(p.derive(PatternId::Cp2, &w("Removing a task"), &mut log).unwrap(), None);
        let prose = Scripted::new(vec![(Stage::Derive, Ok("Insert task C right after task B."))]);
        assert_eq!(
            Pipeline::new(&prose).derive(PatternId::Cp1, &w("Add C after B"), &mut log).unwrap(),
            Some(Meaning::NaturalLanguage("Insert task C right after task B.".into()))
        );
    }

    #[test]
    fn apply_with_mock_matches_engine() {
        let mock = MockBackend::new();
        let p = Pipeline::new(&mock);
        let model = seq(&["A", "B"]);
        let meaning = StructuredMeaning::Insert { new_label: "C".into(), position: Position::after("A") };
        let out = p.apply(&model, &Meaning::Structured(meaning.clone()), &mut Vec::new()).unwrap();
        assert_eq!(serialize_dsl(&out), serialize_dsl(&apply_pattern(&model, &meaning).unwrap()));
    }

    #[test]
    fn apply_rejects_fenced_and_invalid_output() {
        let fenced = Scripted::new(vec![(Stage::Apply, Ok("```\nprocess \"P\"\n  task \"A\"\n```"))]);
        let meaning = Meaning::NaturalLanguage("x".into());
        assert!(matches!(
            Pipeline::new(&fenced).apply(&seq(&["A"]), &meaning, &mut Vec::new()),
            Err(ApplyError::UnparseableOutput(_))
        ));
        let dup = Scripted::new(vec![(Stage::Apply, Ok("process \"P\"\n  task \"A\"\n  task \"A\"\n"))]);
        assert!(matches!(
            Pipeline::new(&dup).apply(&seq(&["A"]), &meaning, &mut Vec::new()),
            Err(ApplyError::InvalidModelOutput(_))
        ));
    }

    #[test]
    fn cpmr_traces() {
        let mock = MockBackend::new();
        let p = Pipeline::new(&mock);
        let model = seq(&["A", "B"]);
        let eao = seq(&["A", "B", "C"]);
        let expected = Expected { pattern: Some(PatternId::Cp1), eao: Some(eao.clone()) };

        let ok = p.run_cpmr(&model, &w("Add task C after task B"), &expected).unwrap();
        assert_eq!(ok.flags(), "(T,T,T,T)");
        assert_eq!(ok.aao.as_ref(), Some(&eao));
        assert_eq!(ok.transcripts.len(), 3);

        let lost = p.run_cpmr(&model, &w("I don't know"), &expected).unwrap();
        assert_eq!(lost.flags(), "(F,·,·,·)");

        let vague = p.run_cpmr(&model, &w("Add task E"), &expected).unwrap();
        assert_eq!(vague.flags(), "(T,T,F,·)");

        let unknown = p.run_cpmr(&model, &w("Add task C after task B"), &Expected::default()).unwrap();
        assert_eq!(unknown.flags(), "(T,·,T,·)");
        for trace in [ok, lost, vague, unknown] {
            assert!(trace.shape_ok());
        }
    }

    #[test]
    fn failed_application_counts_as_mismatch() {
        let mock = MockBackend::new();
        let model = seq(&["A", "B"]);
        let expected = Expected { pattern: Some(PatternId::Cp1), eao: Some(model.clone()) };
        let trace = Pipeline::new(&mock).run_cpmr(&model, &w("Add task A after task B"), &expected).unwrap();
        assert_eq!(trace.flags(), "(T,T,T,F)");
        assert!(trace.error.is_some() && trace.aao.is_none());
    }

    #[test]
    fn baseline_traces() {
        let mock = MockBackend::new();
        let p = Pipeline::new(&mock);
        let model = seq(&["A", "B"]);
        let eao = seq(&["A", "C", "B"]);
        let good = p.run_baseline(&model, &w("Insert task C between A and B"), Some(&eao)).unwrap();
        assert_eq!(good.step_3, Some(true));
        assert_eq!(good.transcripts.len(), 1);
        assert_eq!(good.transcripts[0].stage, Stage::Baseline);
        let bad = p.run_baseline(&model, &w("Make it better"), Some(&eao)).unwrap();
        assert_eq!(bad.step_3, Some(false));
        assert!(bad.error.is_some());
        assert!(good.shape_ok() && bad.shape_ok());
    }

    #[test]
    fn backend_failure_keeps_partial_trace() {
        let flaky = Scripted::new(vec![
            (Stage::Identify, Ok("cp1")),
            (Stage::Derive, Err(BackendError::Unavailable("down".into()))),
        ]);
        let failure = Pipeline::new(&flaky).run_cpmr(&seq(&["A"]), &w("Add B after A"), &Expected::default()).unwrap_err();
        assert_eq!(failure.partial.identified, Some(PatternId::Cp1));
        assert_eq!(failure.partial.transcripts.len(), 1);
    }

    #[test]
    fn outgoing_prompts_are_fully_instantiated() {
        let spy = Scripted::new(vec![
            (Stage::Identify, Ok("cp1")),
            (Stage::Derive, Ok("Insert task C directly after task B")),
            (Stage::Apply, Ok("process \"P\"\n  task \"A\"\n")),
        ]);
        let p = Pipeline::new(&spy);
        p.run_cpmr(&seq(&["A", "B"]), &w("Add task C after task B"), &Expected::default()).unwrap();
        p.run_baseline(&seq(&["A", "B"]), &w("Add task C after task B"), None).unwrap();
        let seen = spy.seen.lock().unwrap();
        assert_eq!(seen.len(), 4);
        for request in seen.iter() {
            assert!(prompts::leftover_placeholders(&request.prompt).is_empty());
            assert!(!request.prompt.system.contains('<') && !request.prompt.user.contains('<'));
            assert!(!request.prompt.system.contains('>') && !request.prompt.user.contains('>'));
        }
    }

    #[test]
    fn transcript_lines_are_json() {
        let mock = MockBackend::new();
        let trace = Pipeline::new(&mock).run_cpmr(&seq(&["A", "B"]), &w("Add task C after task B"), &Expected::default()).unwrap();
        for line in trace.transcript_lines().lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for key in ["stage", "request", "response", "elapsed_ms"] {
                assert!(v.get(key).is_some(), "{key} missing in {line}");
            }
        }
    }
}
