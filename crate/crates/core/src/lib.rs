// SPDX-License-Identifier: Apache-2.0

//! Conversational process-model redesign: a block-structured model, its text
//! and graph forms, the change-pattern engine, model similarity, the
//! identify → derive → apply pipeline and the evaluation harness.

pub mod dsl;
pub mod evaluation;
pub mod graph;
pub mod model;
pub mod patterns;
pub mod pipeline;
pub mod similarity;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use dsl::{parse_dsl, serialize_dsl, DslError};
pub use graph::{export_graph, GraphDoc, GraphEdge, GraphNode, NodeKind};
pub use model::{
    all_labels, find_by_label, validate, Branch, Diagnostic, ElementCounts, Fragment, FragmentPath, GatewayKind,
    ModelError, ProcessModel, Sequence, ViolationCode,
};
pub use patterns::{
    apply_pattern, catalog, render_meaning_nl, ConditionRef, GatewayRef, PatternCatalog, PatternError, PatternId,
    Position, StructuredMeaning,
};
pub use similarity::{dice, element_strings, models_equal, similarity, SimilarityScore};
pub use evaluation::{
    agreement, aggregate, classify, load_survey, reason_rollup, run_evaluation, AggregateReport, EvaluationRecord,
    Observation, OutcomeCategory, Reason, Rollup, SurveyRecord,
};
