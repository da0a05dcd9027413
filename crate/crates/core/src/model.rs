// SPDX-License-Identifier: Apache-2.0

//! Block-structured process models.
//!
//! A model is a tree of fragments hanging off a root sequence. Start and end
//! events are implicit: the root sequence runs from the single start event to
//! the single end event, which makes every well-formed tree structurally sound
//! once translated into a flow graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// An ordered list of fragments. Sequences are never nested directly inside
/// each other, so there is no `Sequence` fragment variant.
pub type Sequence = Vec<Fragment>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayKind {
    Xor,
    And,
}

impl GatewayKind {
    pub fn keyword(self) -> &'static str {
        match self {
            GatewayKind::Xor => "xor",
            GatewayKind::And => "and",
        }
    }
}

impl fmt::Display for GatewayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Branch {
    /// Present iff the owning gateway is exclusive.
    pub condition: Option<String>,
    pub body: Sequence,
}

impl Branch {
    pub fn xor(condition: impl Into<String>, body: Sequence) -> Self {
        Branch { condition: Some(condition.into()), body }
    }

    pub fn and(body: Sequence) -> Self {
        Branch { condition: None, body }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Fragment {
    Task(String),
    Subprocess { label: String, body: Sequence },
    Gateway { kind: GatewayKind, branches: Vec<Branch> },
    LoopPre { condition: String, body: Sequence },
    LoopPost { condition: String, body: Sequence },
}

impl Fragment {
    pub fn task(label: impl Into<String>) -> Self {
        Fragment::Task(label.into())
    }

    pub fn subprocess(label: impl Into<String>, body: Sequence) -> Self {
        Fragment::Subprocess { label: label.into(), body }
    }

    pub fn xor(branches: Vec<Branch>) -> Self {
        Fragment::Gateway { kind: GatewayKind::Xor, branches }
    }

    pub fn and(branches: Vec<Branch>) -> Self {
        Fragment::Gateway { kind: GatewayKind::And, branches }
    }

    pub fn loop_pre(condition: impl Into<String>, body: Sequence) -> Self {
        Fragment::LoopPre { condition: condition.into(), body }
    }

    pub fn loop_post(condition: impl Into<String>, body: Sequence) -> Self {
        Fragment::LoopPost { condition: condition.into(), body }
    }

    /// Label of a task or subprocess.
    pub fn label(&self) -> Option<&str> {
        match self {
            Fragment::Task(label) | Fragment::Subprocess { label, .. } => Some(label),
            _ => None,
        }
    }

    /// Child sequences in tree order.
    pub fn child_sequences(&self) -> Vec<&Sequence> {
        match self {
            Fragment::Task(_) => Vec::new(),
            Fragment::Subprocess { body, .. }
            | Fragment::LoopPre { body, .. }
            | Fragment::LoopPost { body, .. } => vec![body],
            Fragment::Gateway { branches, .. } => branches.iter().map(|b| &b.body).collect(),
        }
    }

    /// Every task and subprocess label inside this fragment, itself included.
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect_labels(std::slice::from_ref(self), &mut out);
        out
    }
}

fn collect_labels(seq: &[Fragment], out: &mut Vec<String>) {
    for fragment in seq {
        if let Some(label) = fragment.label() {
            out.push(label.to_string());
        }
        for child in fragment.child_sequences() {
            collect_labels(child, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcessModel {
    pub name: String,
    pub body: Sequence,
}

impl ProcessModel {
    pub fn new(name: impl Into<String>, body: Sequence) -> Self {
        ProcessModel { name: name.into(), body }
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate(self)
    }

    pub fn is_valid(&self) -> bool {
        validate(self).is_empty()
    }

    pub fn find_by_label(&self, label: &str) -> Result<FragmentPath, ModelError> {
        find_by_label(self, label)
    }

    pub fn all_labels(&self) -> BTreeSet<String> {
        all_labels(self)
    }

    pub fn get(&self, path: &FragmentPath) -> Option<&Fragment> {
        let (seq, index) = path.split()?;
        sequence_at(&self.body, seq)?.get(index)
    }
}

/// Position of a fragment: alternating child indices from the root sequence.
///
/// Inside a sequence a step selects a child. A gateway consumes one extra
/// step selecting the branch; subprocesses and loops step straight into their
/// body. `[1, 1, 0]` is the first fragment of branch 1 of the gateway at
/// root position 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct FragmentPath(pub Vec<usize>);

impl FragmentPath {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Splits into the address of the owning sequence and the index inside it.
    pub fn split(&self) -> Option<(&[usize], usize)> {
        let (last, seq) = self.0.split_last()?;
        Some((seq, *last))
    }

    pub fn is_ancestor_of(&self, other: &FragmentPath) -> bool {
        other.0.len() > self.0.len() && other.0.starts_with(&self.0)
    }
}

impl fmt::Display for FragmentPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("/")?;
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("/"))
    }
}

/// Resolves the sequence addressed by `addr` (a path prefix that ends at a
/// sequence rather than at a fragment).
pub fn sequence_at<'a>(root: &'a Sequence, addr: &[usize]) -> Option<&'a Sequence> {
    let Some((&first, rest)) = addr.split_first() else {
        return Some(root);
    };
    match root.get(first)? {
        Fragment::Task(_) => None,
        Fragment::Gateway { branches, .. } => {
            let (&branch, rest) = rest.split_first()?;
            sequence_at(&branches.get(branch)?.body, rest)
        }
        Fragment::Subprocess { body, .. }
        | Fragment::LoopPre { body, .. }
        | Fragment::LoopPost { body, .. } => sequence_at(body, rest),
    }
}

pub fn sequence_at_mut<'a>(root: &'a mut Sequence, addr: &[usize]) -> Option<&'a mut Sequence> {
    let Some((&first, rest)) = addr.split_first() else {
        return Some(root);
    };
    match root.get_mut(first)? {
        Fragment::Task(_) => None,
        Fragment::Gateway { branches, .. } => {
            let (&branch, rest) = rest.split_first()?;
            sequence_at_mut(&mut branches.get_mut(branch)?.body, rest)
        }
        Fragment::Subprocess { body, .. }
        | Fragment::LoopPre { body, .. }
        | Fragment::LoopPost { body, .. } => sequence_at_mut(body, rest),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    DuplicateLabel,
    EmptyLabel,
    TooFewBranches,
    MissingCondition,
    UnexpectedCondition,
    DuplicateCondition,
    EmptyParallelBranch,
    EmptyCondition,
    EmptyBody,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::DuplicateLabel => "DuplicateLabel",
            ViolationCode::EmptyLabel => "EmptyLabel",
            ViolationCode::TooFewBranches => "TooFewBranches",
            ViolationCode::MissingCondition => "MissingCondition",
            ViolationCode::UnexpectedCondition => "UnexpectedCondition",
            ViolationCode::DuplicateCondition => "DuplicateCondition",
            ViolationCode::EmptyParallelBranch => "EmptyParallelBranch",
            ViolationCode::EmptyCondition => "EmptyCondition",
            ViolationCode::EmptyBody => "EmptyBody",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: FragmentPath,
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("no task or subprocess labelled '{0}'")]
    NotFound(String),
    #[error("label must not be empty")]
    EmptyLabel,
}

/// Checks every structural invariant; an empty result means well-formed.
pub fn validate(model: &ProcessModel) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let mut seen: BTreeMap<String, Vec<FragmentPath>> = BTreeMap::new();
    let mut prefix = Vec::new();
    validate_sequence(&model.body, &mut prefix, &mut seen, &mut diagnostics);

    for (label, paths) in seen {
        if paths.len() > 1 {
            for path in paths {
                diagnostics.push(Diagnostic {
                    path,
                    code: ViolationCode::DuplicateLabel,
                    message: format!("label '{label}' is used more than once"),
                });
            }
        }
    }
    diagnostics.sort_by(|a, b| a.path.cmp(&b.path).then(a.code.cmp(&b.code)));
    diagnostics
}

fn validate_sequence(
    seq: &Sequence,
    prefix: &mut Vec<usize>,
    seen: &mut BTreeMap<String, Vec<FragmentPath>>,
    out: &mut Vec<Diagnostic>,
) {
    for (index, fragment) in seq.iter().enumerate() {
        prefix.push(index);
        validate_fragment(fragment, prefix, seen, out);
        prefix.pop();
    }
}

fn validate_fragment(
    fragment: &Fragment,
    path: &mut Vec<usize>,
    seen: &mut BTreeMap<String, Vec<FragmentPath>>,
    out: &mut Vec<Diagnostic>,
) {
    let here = |path: &Vec<usize>| FragmentPath(path.clone());
    if let Some(label) = fragment.label() {
        if label.trim().is_empty() {
            out.push(Diagnostic {
                path: here(path),
                code: ViolationCode::EmptyLabel,
                message: "task and subprocess labels must not be empty".into(),
            });
        } else {
            seen.entry(label.to_string()).or_default().push(here(path));
        }
    }

    match fragment {
        Fragment::Task(_) => {}
        Fragment::Subprocess { body, .. } => {
            if body.is_empty() {
                out.push(Diagnostic {
                    path: here(path),
                    code: ViolationCode::EmptyBody,
                    message: "subprocess body must not be empty".into(),
                });
            }
            validate_sequence(body, path, seen, out);
        }
        Fragment::LoopPre { condition, body } | Fragment::LoopPost { condition, body } => {
            if condition.trim().is_empty() {
                out.push(Diagnostic {
                    path: here(path),
                    code: ViolationCode::EmptyCondition,
                    message: "loop condition must not be empty".into(),
                });
            }
            if body.is_empty() {
                out.push(Diagnostic {
                    path: here(path),
                    code: ViolationCode::EmptyBody,
                    message: "loop body must not be empty".into(),
                });
            }
            validate_sequence(body, path, seen, out);
        }
        Fragment::Gateway { kind, branches } => {
            if branches.len() < 2 {
                out.push(Diagnostic {
                    path: here(path),
                    code: ViolationCode::TooFewBranches,
                    message: format!("{kind} block has {} branch(es), needs at least 2", branches.len()),
                });
            }
            let mut conditions = BTreeSet::new();
            for (b, branch) in branches.iter().enumerate() {
                path.push(b);
                match (kind, &branch.condition) {
                    (GatewayKind::Xor, None) => out.push(Diagnostic {
                        path: here(path),
                        code: ViolationCode::MissingCondition,
                        message: "exclusive branch needs a condition".into(),
                    }),
                    (GatewayKind::Xor, Some(c)) if c.trim().is_empty() => out.push(Diagnostic {
                        path: here(path),
                        code: ViolationCode::EmptyCondition,
                        message: "exclusive branch condition must not be empty".into(),
                    }),
                    (GatewayKind::Xor, Some(c)) => {
                        if !conditions.insert(c.as_str()) {
                            out.push(Diagnostic {
                                path: here(path),
                                code: ViolationCode::DuplicateCondition,
                                message: format!("condition '{c}' appears on two branches"),
                            });
                        }
                    }
                    (GatewayKind::And, Some(_)) => out.push(Diagnostic {
                        path: here(path),
                        code: ViolationCode::UnexpectedCondition,
                        message: "parallel branches carry no condition".into(),
                    }),
                    (GatewayKind::And, None) => {}
                }
                if *kind == GatewayKind::And && branch.body.is_empty() {
                    out.push(Diagnostic {
                        path: here(path),
                        code: ViolationCode::EmptyParallelBranch,
                        message: "parallel branch must contain at least one fragment".into(),
                    });
                }
                validate_sequence(&branch.body, path, seen, out);
                path.pop();
            }
        }
    }
}

/// Path of the task or subprocess carrying `label`. With unique labels there
/// is at most one; on an invalid model the first in preorder wins.
pub fn find_by_label(model: &ProcessModel, label: &str) -> Result<FragmentPath, ModelError> {
    if label.is_empty() {
        return Err(ModelError::EmptyLabel);
    }
    let mut path = Vec::new();
    if search(&model.body, label, &mut path) {
        Ok(FragmentPath(path))
    } else {
        Err(ModelError::NotFound(label.to_string()))
    }
}

fn search(seq: &Sequence, label: &str, path: &mut Vec<usize>) -> bool {
    for (index, fragment) in seq.iter().enumerate() {
        path.push(index);
        if fragment.label() == Some(label) {
            return true;
        }
        match fragment {
            Fragment::Task(_) => {}
            Fragment::Gateway { branches, .. } => {
                for (b, branch) in branches.iter().enumerate() {
                    path.push(b);
                    if search(&branch.body, label, path) {
                        return true;
                    }
                    path.pop();
                }
            }
            Fragment::Subprocess { body, .. }
            | Fragment::LoopPre { body, .. }
            | Fragment::LoopPost { body, .. } => {
                if search(body, label, path) {
                    return true;
                }
            }
        }
        path.pop();
    }
    false
}

pub fn all_labels(model: &ProcessModel) -> BTreeSet<String> {
    let mut out = Vec::new();
    collect_labels(&model.body, &mut out);
    out.into_iter().collect()
}

/// Counts of model elements: (tasks, subprocesses, gateway blocks, loops),
/// excluding anything inside subprocess bodies.
pub fn top_level_counts(seq: &Sequence) -> ElementCounts {
    let mut counts = ElementCounts::default();
    count_into(seq, &mut counts);
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElementCounts {
    pub tasks: usize,
    pub subprocesses: usize,
    pub gateways: usize,
    pub loops: usize,
}

fn count_into(seq: &Sequence, counts: &mut ElementCounts) {
    for fragment in seq {
        match fragment {
            Fragment::Task(_) => counts.tasks += 1,
            Fragment::Subprocess { .. } => counts.subprocesses += 1,
            Fragment::Gateway { branches, .. } => {
                counts.gateways += 1;
                for branch in branches {
                    count_into(&branch.body, counts);
                }
            }
            Fragment::LoopPre { body, .. } | Fragment::LoopPost { body, .. } => {
                counts.loops += 1;
                count_into(body, counts);
            }
        }
    }
}
