// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::PatternId;
use crate::model::GatewayKind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Before { label: String },
    After { label: String },
    Between { label_a: String, label_b: String },
}

impl Position {
    pub fn before(label: impl Into<String>) -> Self {
        Position::Before { label: label.into() }
    }

    pub fn after(label: impl Into<String>) -> Self {
        Position::After { label: label.into() }
    }

    pub fn between(a: impl Into<String>, b: impl Into<String>) -> Self {
        Position::Between { label_a: a.into(), label_b: b.into() }
    }

    pub fn labels(&self) -> Vec<&str> {
        match self {
            Position::Before { label } | Position::After { label } => vec![label],
            Position::Between { label_a, label_b } => vec![label_a, label_b],
        }
    }
}

/// Decidable reference to a gateway block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayRef {
    /// Innermost gateway with a branch containing the labelled element.
    ByContainedLabel { label: String },
    /// `index`-th gateway of `kind` in preorder, counting from 1.
    ByOrdinal { kind: GatewayKind, index: usize },
}

impl GatewayRef {
    pub fn contained(label: impl Into<String>) -> Self {
        GatewayRef::ByContainedLabel { label: label.into() }
    }

    pub fn nth(kind: GatewayKind, index: usize) -> Self {
        GatewayRef::ByOrdinal { kind, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionRef {
    GatewayBranch { gateway: GatewayRef, old_condition: String },
    /// Innermost loop around the labelled element.
    Loop { containing_label: String },
}

/// A change pattern with its parameters.
///
/// Wire form: `{"pattern":"cp1","params":{"new_label":"C","position":{"after":{"label":"A"}}}}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "pattern", content = "params")]
pub enum StructuredMeaning {
    #[serde(rename = "cp1")]
    Insert { new_label: String, position: Position },
    #[serde(rename = "cp2")]
    Delete { label: String },
    #[serde(rename = "cp3")]
    Move { label: String, position: Position },
    #[serde(rename = "cp4")]
    Replace { label: String, new_labels: Vec<String> },
    #[serde(rename = "cp5")]
    Swap { label_a: String, label_b: String },
    #[serde(rename = "cp6")]
    ExtractSubprocess { from_label: String, to_label: String, sub_label: String },
    #[serde(rename = "cp7")]
    InlineSubprocess { sub_label: String },
    #[serde(rename = "cp8.1")]
    EmbedLoopPre { label: String, condition: String },
    #[serde(rename = "cp8.2")]
    EmbedLoopPost { label: String, condition: String },
    #[serde(rename = "cp9")]
    Parallelize { labels: Vec<String> },
    #[serde(rename = "cp10")]
    EmbedConditional { label: String, condition: String },
    #[serde(rename = "cp13")]
    UpdateCondition { target: ConditionRef, new_condition: String },
    #[serde(rename = "cp14")]
    Copy { label: String, new_label: String, position: Position },
    #[serde(rename = "cp15")]
    SplitTask { label: String, new_labels: Vec<String> },
    #[serde(rename = "cp16")]
    MergeTasks { labels: Vec<String>, new_label: String },
    #[serde(rename = "cp17")]
    DeleteBranch { gateway: GatewayRef, branch_condition: String },
    #[serde(rename = "cp18")]
    LeaveSingleBranch { gateway: GatewayRef, keep_condition: String },
    #[serde(rename = "cp19")]
    ReplaceGateways {
        gateway: GatewayRef,
        new_kind: GatewayKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        conditions: Option<Vec<String>>,
    },
    #[serde(rename = "lp6")]
    Rename { label: String, new_label: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeaningError {
    #[error("invalid meaning JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Parameters(String),
}

impl StructuredMeaning {
    pub fn pattern(&self) -> PatternId {
        match self {
            StructuredMeaning::Insert { .. } => PatternId::Cp1,
            StructuredMeaning::Delete { .. } => PatternId::Cp2,
            StructuredMeaning::Move { .. } => PatternId::Cp3,
            StructuredMeaning::Replace { .. } => PatternId::Cp4,
            StructuredMeaning::Swap { .. } => PatternId::Cp5,
            StructuredMeaning::ExtractSubprocess { .. } => PatternId::Cp6,
            StructuredMeaning::InlineSubprocess { .. } => PatternId::Cp7,
            StructuredMeaning::EmbedLoopPre { .. } => PatternId::Cp8_1,
            StructuredMeaning::EmbedLoopPost { .. } => PatternId::Cp8_2,
            StructuredMeaning::Parallelize { .. } => PatternId::Cp9,
            StructuredMeaning::EmbedConditional { .. } => PatternId::Cp10,
            StructuredMeaning::UpdateCondition { .. } => PatternId::Cp13,
            StructuredMeaning::Copy { .. } => PatternId::Cp14,
            StructuredMeaning::SplitTask { .. } => PatternId::Cp15,
            StructuredMeaning::MergeTasks { .. } => PatternId::Cp16,
            StructuredMeaning::DeleteBranch { .. } => PatternId::Cp17,
            StructuredMeaning::LeaveSingleBranch { .. } => PatternId::Cp18,
            StructuredMeaning::ReplaceGateways { .. } => PatternId::Cp19,
            StructuredMeaning::Rename { .. } => PatternId::Lp6,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MeaningError> {
        let meaning: StructuredMeaning = serde_json::from_str(text).map_err(|e| MeaningError::Json(e.to_string()))?;
        meaning.check()?;
        Ok(meaning)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("meanings always serialize")
    }

    /// Parameter well-formedness, independent of any model.
    pub fn check(&self) -> Result<(), MeaningError> {
        use StructuredMeaning as M;
        let too_few = |what: &str| Err(MeaningError::Parameters(what.to_string()));
        let mut fields: Vec<(&'static str, &str)> = Vec::new();
        match self {
            M::Insert { new_label, position } => {
                fields.push(("new_label", new_label));
                fields.extend(position.labels().into_iter().map(|l| ("position", l)));
            }
            M::Delete { label } | M::InlineSubprocess { sub_label: label } => fields.push(("label", label)),
            M::Move { label, position } => {
                fields.push(("label", label));
                fields.extend(position.labels().into_iter().map(|l| ("position", l)));
            }
            M::Replace { label, new_labels } => {
                if new_labels.is_empty() {
                    return too_few("replace needs at least one new label");
                }
                fields.push(("label", label));
                fields.extend(new_labels.iter().map(|l| ("new_labels", l.as_str())));
            }
            M::Swap { label_a, label_b } => {
                if label_a == label_b {
                    return too_few("cannot swap an element with itself");
                }
                fields.extend([("label_a", label_a.as_str()), ("label_b", label_b)]);
            }
            M::ExtractSubprocess { from_label, to_label, sub_label } => {
                fields.extend([("from_label", from_label.as_str()), ("to_label", to_label), ("sub_label", sub_label)]);
            }
            M::EmbedLoopPre { label, condition }
            | M::EmbedLoopPost { label, condition }
            | M::EmbedConditional { label, condition } => {
                fields.extend([("label", label.as_str()), ("condition", condition)]);
            }
            M::Parallelize { labels } => {
                if labels.len() < 2 {
                    return too_few("parallelize needs at least two labels");
                }
                fields.extend(labels.iter().map(|l| ("labels", l.as_str())));
            }
            M::UpdateCondition { target, new_condition } => {
                fields.push(("new_condition", new_condition));
                match target {
                    ConditionRef::GatewayBranch { gateway, old_condition } => {
                        check_gateway(gateway)?;
                        fields.push(("old_condition", old_condition));
                    }
                    ConditionRef::Loop { containing_label } => fields.push(("containing_label", containing_label)),
                }
            }
            M::Copy { label, new_label, position } => {
                fields.extend([("label", label.as_str()), ("new_label", new_label)]);
                fields.extend(position.labels().into_iter().map(|l| ("position", l)));
            }
            M::SplitTask { label, new_labels } => {
                if new_labels.len() < 2 {
                    return too_few("split needs at least two new labels");
                }
                fields.push(("label", label));
                fields.extend(new_labels.iter().map(|l| ("new_labels", l.as_str())));
            }
            M::MergeTasks { labels, new_label } => {
                if labels.len() < 2 {
                    return too_few("merge needs at least two labels");
                }
                fields.extend(labels.iter().map(|l| ("labels", l.as_str())));
                fields.push(("new_label", new_label));
            }
            M::DeleteBranch { gateway, branch_condition: branch }
            | M::LeaveSingleBranch { gateway, keep_condition: branch } => {
                check_gateway(gateway)?;
                fields.push(("branch", branch));
            }
            M::ReplaceGateways { gateway, conditions, .. } => {
                check_gateway(gateway)?;
                if let Some(conditions) = conditions {
                    fields.extend(conditions.iter().map(|c| ("conditions", c.as_str())));
                }
            }
            M::Rename { label, new_label } => fields.extend([("label", label.as_str()), ("new_label", new_label)]),
        }
        match fields.iter().find(|(_, value)| value.trim().is_empty()) {
            Some((field, _)) => Err(MeaningError::Parameters(format!("{field} must not be empty"))),
            None => Ok(()),
        }
    }
}

fn check_gateway(gateway: &GatewayRef) -> Result<(), MeaningError> {
    match gateway {
        GatewayRef::ByOrdinal { index: 0, .. } => Err(MeaningError::Parameters("gateway ordinals start at 1".into())),
        GatewayRef::ByContainedLabel { label } if label.trim().is_empty() => {
            Err(MeaningError::Parameters("gateway label must not be empty".into()))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_form_is_adjacently_tagged() {
        let meaning = StructuredMeaning::Insert { new_label: "C".into(), position: Position::after("A") };
        assert_eq!(meaning.to_json(), r#"{"pattern":"cp1","params":{"new_label":"C","position":{"after":{"label":"A"}}}}"#);
        let back = StructuredMeaning::from_json(&meaning.to_json()).unwrap();
        assert_eq!(back, meaning);

        let meaning = StructuredMeaning::DeleteBranch {
            gateway: GatewayRef::nth(GatewayKind::Xor, 1),
            branch_condition: "false".into(),
        };
        assert_eq!(
            meaning.to_json(),
            r#"{"pattern":"cp17","params":{"gateway":{"by_ordinal":{"kind":"xor","index":1}},"branch_condition":"false"}}"#
        );
    }

    #[test]
    fn loop_pattern_ids_on_the_wire() {
        let json = r#"{"pattern":"cp8.2","params":{"label":"D","condition":"retry"}}"#;
        let meaning = StructuredMeaning::from_json(json).unwrap();
        assert_eq!(meaning.pattern(), PatternId::Cp8_2);
    }

    #[test]
    fn unsupported_and_malformed_inputs() {
        assert!(matches!(
            StructuredMeaning::from_json(r#"{"pattern":"cp11","params":{}}"#),
            Err(MeaningError::Json(_))
        ));
        assert!(matches!(
            StructuredMeaning::from_json(r#"{"pattern":"cp9","params":{"labels":["A"]}}"#),
            Err(MeaningError::Parameters(_))
        ));
        assert!(matches!(
            StructuredMeaning::from_json(r#"{"pattern":"cp15","params":{"label":"A","new_labels":["B"]}}"#),
            Err(MeaningError::Parameters(_))
        ));
        assert!(matches!(
            StructuredMeaning::from_json(r#"{"pattern":"cp2","params":{"label":" "}}"#),
            Err(MeaningError::Parameters(_))
        ));
        assert!(matches!(
            StructuredMeaning::from_json(
                r#"{"pattern":"cp17","params":{"gateway":{"by_ordinal":{"kind":"and","index":0}},"branch_condition":"x"}}"#
            ),
            Err(MeaningError::Parameters(_))
        ));
    }

    #[test]
    fn optional_conditions_default_to_none() {
        let json = r#"{"pattern":"cp19","params":{"gateway":{"by_contained_label":{"label":"B"}},"new_kind":"and"}}"#;
        let meaning = StructuredMeaning::from_json(json).unwrap();
        assert_eq!(
            meaning,
            StructuredMeaning::ReplaceGateways {
                gateway: GatewayRef::contained("B"),
                new_kind: GatewayKind::And,
                conditions: None
            }
        );
        assert_eq!(meaning.to_json(), json);
    }
}
