// SPDX-License-Identifier: Apache-2.0

//! Deterministic natural-language phrasing of a structured meaning.

use super::meaning::{ConditionRef, GatewayRef, Position, StructuredMeaning};
use crate::model::GatewayKind;

const ORDINALS: [&str; 10] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];

fn q(text: &str) -> String {
    if text.contains('\'') {
        format!("\"{text}\"")
    } else {
        format!("'{text}'")
    }
}

fn kind_adjective(kind: GatewayKind) -> &'static str {
    match kind {
        GatewayKind::Xor => "exclusive",
        GatewayKind::And => "parallel",
    }
}

/// `'A', 'B' and 'C'`
fn list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| q(s)).collect();
    match quoted.as_slice() {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn position(p: &Position) -> String {
    match p {
        Position::Before { label } => format!("directly before task {}", q(label)),
        Position::After { label } => format!("directly after task {}", q(label)),
        Position::Between { label_a, label_b } => format!("between task {} and task {}", q(label_a), q(label_b)),
    }
}

pub fn gateway_phrase(gateway: &GatewayRef) -> String {
    match gateway {
        GatewayRef::ByOrdinal { kind, index } => match index.checked_sub(1).and_then(|i| ORDINALS.get(i)) {
            Some(ord) => format!("the {ord} {} gateway", kind_adjective(*kind)),
            None => format!("{} gateway number {index}", kind_adjective(*kind)),
        },
        GatewayRef::ByContainedLabel { label } => format!("the gateway containing task {}", q(label)),
    }
}

pub fn render_meaning_nl(meaning: &StructuredMeaning) -> String {
    use StructuredMeaning as M;
    match meaning {
        M::Insert { new_label, position: p } => format!("Insert a new task {} {}.", q(new_label), position(p)),
        M::Delete { label } => format!("Delete task {} from the process.", q(label)),
        M::Move { label, position: p } => format!("Move task {} to the position {}.", q(label), position(p)),
        M::Replace { label, new_labels } => {
            if new_labels.len() == 1 {
                format!("Replace task {} with the new task {}.", q(label), q(&new_labels[0]))
            } else {
                format!("Replace task {} with the new tasks {} in this order.", q(label), list(new_labels))
            }
        }
        M::Swap { label_a, label_b } => format!("Swap the positions of task {} and task {}.", q(label_a), q(label_b)),
        M::ExtractSubprocess { from_label, to_label, sub_label } => format!(
            "Extract the fragment from task {} to task {} into a new subprocess {}.",
            q(from_label),
            q(to_label),
            q(sub_label)
        ),
        M::InlineSubprocess { sub_label } => {
            format!("Inline subprocess {} so that its content replaces it in the parent process.", q(sub_label))
        }
        M::EmbedLoopPre { label, condition } => format!(
            "Embed task {} in a pre-conditional loop with condition {}, so that it is executed zero or more times while the condition holds.",
            q(label),
            q(condition)
        ),
        M::EmbedLoopPost { label, condition } => format!(
            "Embed task {} in a post-conditional loop with condition {}, so that it is executed at least once and repeated while the condition holds.",
            q(label),
            q(condition)
        ),
        M::Parallelize { labels } => {
            format!("Parallelize tasks {} so that they are executed in parallel branches.", list(labels))
        }
        M::EmbedConditional { label, condition } => format!(
            "Embed task {} in a conditional branch so that it is only executed if {}, otherwise it is skipped.",
            q(label),
            q(condition)
        ),
        M::UpdateCondition { target, new_condition } => match target {
            ConditionRef::GatewayBranch { gateway, old_condition } => format!(
                "Update the condition {} of {} to {}.",
                q(old_condition),
                gateway_phrase(gateway),
                q(new_condition)
            ),
            ConditionRef::Loop { containing_label } => format!(
                "Update the condition of the loop containing task {} to {}.",
                q(containing_label),
                q(new_condition)
            ),
        },
        M::Copy { label, new_label, position: p } => format!(
            "Copy task {} as a new task {} and place the copy {}.",
            q(label),
            q(new_label),
            position(p)
        ),
        M::SplitTask { label, new_labels } => {
            format!("Split task {} into the separate tasks {} in this order.", q(label), list(new_labels))
        }
        M::MergeTasks { labels, new_label } => {
            format!("Merge tasks {} into a single task {}.", list(labels), q(new_label))
        }
        M::DeleteBranch { gateway, branch_condition } => {
            format!("Delete the entire branch {} of {}.", q(branch_condition), gateway_phrase(gateway))
        }
        M::LeaveSingleBranch { gateway, keep_condition } => format!(
            "Keep only the branch {} of {} and remove all other branches.",
            q(keep_condition),
            gateway_phrase(gateway)
        ),
        M::ReplaceGateways { gateway, new_kind, conditions } => {
            let from = gateway_phrase(gateway);
            match (new_kind, conditions) {
                (GatewayKind::Xor, Some(c)) if !c.is_empty() => {
                    format!("Replace {} with an exclusive gateway using the conditions {}.", from, list(c))
                }
                (GatewayKind::Xor, _) => format!("Replace {} with an exclusive gateway.", from),
                (GatewayKind::And, _) => format!("Replace {} with a parallel gateway.", from),
            }
        }
        M::Rename { label, new_label } => format!("Rename task {} to {}.", q(label), q(new_label)),
    }
}
