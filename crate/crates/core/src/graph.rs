// SPDX-License-Identifier: Apache-2.0

//! Node/edge export of a model.
//!
//! Translation rules:
//! - a sequence chains its children in order between start and end;
//! - a gateway block becomes a split and a matching join, with one path per
//!   branch; exclusive out-edges carry the branch condition, and an empty
//!   exclusive branch is a direct split-to-join edge;
//! - `loop-pre c [B]`: entry join, split, edge `c` into B, B back to the
//!   join, edge `not(c)` from the split to the successor;
//! - `loop-post c [B]`: entry join, B, split, edge `c` back to the join,
//!   edge `not(c)` to the successor;
//! - a subprocess is one collapsed node.
//!
//! Node ids are derived from preorder positions only.

use serde::{Deserialize, Serialize};

use crate::model::{Fragment, GatewayKind, ProcessModel, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    End,
    Task,
    Subprocess,
    XorSplit,
    XorJoin,
    AndSplit,
    AndJoin,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Start => "start",
            NodeKind::End => "end",
            NodeKind::Task => "task",
            NodeKind::Subprocess => "subprocess",
            NodeKind::XorSplit => "xor_split",
            NodeKind::XorJoin => "xor_join",
            NodeKind::AndSplit => "and_split",
            NodeKind::AndJoin => "and_join",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl GraphDoc {
    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph documents always serialize")
    }
}

pub fn export_graph(model: &ProcessModel) -> GraphDoc {
    export_sequence(&model.body)
}

/// Graph of a bare sequence framed by its own start and end nodes. Used for
/// subprocess bodies as well as whole models.
pub fn export_sequence(seq: &Sequence) -> GraphDoc {
    let mut builder = Builder::default();
    builder.node("start".into(), NodeKind::Start, None);
    let (last, condition) = builder.sequence(seq, "start".into(), None);
    builder.node("end".into(), NodeKind::End, None);
    builder.edge(last, "end".into(), condition);
    builder.doc
}

#[derive(Default)]
struct Builder {
    doc: GraphDoc,
    preorder: usize,
}

impl Builder {
    fn node(&mut self, id: String, kind: NodeKind, label: Option<String>) -> String {
        self.doc.nodes.push(GraphNode { id: id.clone(), kind, label });
        id
    }

    fn edge(&mut self, source: String, target: String, condition: Option<String>) {
        self.doc.edges.push(GraphEdge { source, target, condition });
    }

    /// Lowers `seq` after `prev`; the first edge carries `condition`. Returns
    /// the last node and the condition pending on its outgoing edge.
    fn sequence(&mut self, seq: &Sequence, mut prev: String, mut condition: Option<String>) -> (String, Option<String>) {
        for fragment in seq {
            (prev, condition) = self.fragment(fragment, prev, condition);
        }
        (prev, condition)
    }

    fn fragment(&mut self, fragment: &Fragment, prev: String, condition: Option<String>) -> (String, Option<String>) {
        self.preorder += 1;
        let k = self.preorder;
        match fragment {
            Fragment::Task(label) => {
                let id = self.node(format!("task#{k}"), NodeKind::Task, Some(label.clone()));
                self.edge(prev, id.clone(), condition);
                (id, None)
            }
            Fragment::Subprocess { label, .. } => {
                let id = self.node(format!("subprocess#{k}"), NodeKind::Subprocess, Some(label.clone()));
                self.edge(prev, id.clone(), condition);
                (id, None)
            }
            Fragment::Gateway { kind, branches } => {
                let (split_kind, join_kind) = match kind {
                    GatewayKind::Xor => (NodeKind::XorSplit, NodeKind::XorJoin),
                    GatewayKind::And => (NodeKind::AndSplit, NodeKind::AndJoin),
                };
                let split = self.node(format!("{}#{k}", split_kind.as_str()), split_kind, None);
                self.edge(prev, split.clone(), condition);
                let mut ends = Vec::with_capacity(branches.len());
                for branch in branches {
                    ends.push(self.sequence(&branch.body, split.clone(), branch.condition.clone()));
                }
                let join = self.node(format!("{}#{k}", join_kind.as_str()), join_kind, None);
                for (last, pending) in ends {
                    self.edge(last, join.clone(), pending);
                }
                (join, None)
            }
            Fragment::LoopPre { condition: guard, body } => {
                let join = self.node(format!("xor_join#{k}"), NodeKind::XorJoin, None);
                self.edge(prev, join.clone(), condition);
                let split = self.node(format!("xor_split#{k}"), NodeKind::XorSplit, None);
                self.edge(join.clone(), split.clone(), None);
                let (last, pending) = self.sequence(body, split.clone(), Some(guard.clone()));
                self.edge(last, join, pending);
                (split, Some(negate(guard)))
            }
            Fragment::LoopPost { condition: guard, body } => {
                let join = self.node(format!("xor_join#{k}"), NodeKind::XorJoin, None);
                self.edge(prev, join.clone(), condition);
                let (last, pending) = self.sequence(body, join.clone(), None);
                let split = self.node(format!("xor_split#{k}"), NodeKind::XorSplit, None);
                self.edge(last, split.clone(), pending);
                self.edge(split.clone(), join, Some(guard.clone()));
                (split, Some(negate(guard)))
            }
        }
    }
}

fn negate(condition: &str) -> String {
    format!("not({condition})")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Branch;

    fn t(label: &str) -> Fragment {
        Fragment::task(label)
    }

    fn edges(doc: &GraphDoc) -> Vec<(String, String, Option<String>)> {
        doc.edges.iter().map(|e| (e.source.clone(), e.target.clone(), e.condition.clone())).collect()
    }

    fn e(s: &str, t: &str, c: Option<&str>) -> (String, String, Option<String>) {
        (s.into(), t.into(), c.map(String::from))
    }

    #[test]
    fn single_task_chain() {
        let doc = export_graph(&ProcessModel::new("P", vec![t("A")]));
        let ids: Vec<_> = doc.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["start", "task#1", "end"]);
        assert_eq!(edges(&doc), vec![e("start", "task#1", None), e("task#1", "end", None)]);
    }

    #[test]
    fn xor_between_tasks() {
        let model = ProcessModel::new(
            "P",
            vec![t("A"), Fragment::xor(vec![Branch::xor("c", vec![t("B")]), Branch::xor("d", vec![t("C")])]), t("D")],
        );
        let doc = export_graph(&model);
        let ids: Vec<_> = doc.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["start", "task#1", "xor_split#2", "task#3", "task#4", "xor_join#2", "task#5", "end"]);
        assert_eq!(
            edges(&doc),
            vec![
                e("start", "task#1", None),
                e("task#1", "xor_split#2", None),
                e("xor_split#2", "task#3", Some("c")),
                e("xor_split#2", "task#4", Some("d")),
                e("task#3", "xor_join#2", None),
                e("task#4", "xor_join#2", None),
                e("xor_join#2", "task#5", None),
                e("task#5", "end", None),
            ]
        );
    }

    #[test]
    fn empty_xor_branch_is_a_direct_edge() {
        let model = ProcessModel::new(
            "P",
            vec![Fragment::xor(vec![Branch::xor("ok", vec![t("D")]), Branch::xor("else", vec![])])],
        );
        let doc = export_graph(&model);
        assert!(edges(&doc).contains(&e("xor_split#1", "xor_join#1", Some("else"))));
    }

    #[test]
    fn pre_conditional_loop() {
        let model = ProcessModel::new("P", vec![t("A"), Fragment::loop_pre("more items", vec![t("B")]), t("C")]);
        let doc = export_graph(&model);
        assert_eq!(
            edges(&doc),
            vec![
                e("start", "task#1", None),
                e("task#1", "xor_join#2", None),
                e("xor_join#2", "xor_split#2", None),
                e("xor_split#2", "task#3", Some("more items")),
                e("task#3", "xor_join#2", None),
                e("xor_split#2", "task#4", Some("not(more items)")),
                e("task#4", "end", None),
            ]
        );
    }

    #[test]
    fn post_conditional_loop() {
        let model = ProcessModel::new("P", vec![Fragment::loop_post("retry", vec![t("B")])]);
        let doc = export_graph(&model);
        assert_eq!(
            edges(&doc),
            vec![
                e("start", "xor_join#1", None),
                e("xor_join#1", "task#2", None),
                e("task#2", "xor_split#1", None),
                e("xor_split#1", "xor_join#1", Some("retry")),
                e("xor_split#1", "end", Some("not(retry)")),
            ]
        );
    }

    #[test]
    fn wire_form_keys() {
        let doc = export_graph(&ProcessModel::new("P", vec![t("A")]));
        let json = doc.to_json();
        assert!(json.starts_with(r#"{"nodes":[{"id":"start","kind":"start","label":null}"#), "{json}");
        assert!(json.contains(r#"{"source":"start","target":"task#1","condition":null}"#));
        let back: GraphDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }
}
