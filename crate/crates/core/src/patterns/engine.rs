// SPDX-License-Identifier: Apache-2.0

//! Deterministic change-pattern application.
//!
//! Every pattern works on a clone of the input: resolve targets, edit the
//! owning sequence in place, then re-validate. A result that would break a
//! model invariant is reported as an error, never returned.

use std::collections::BTreeMap;

use super::meaning::{ConditionRef, GatewayRef, Position, StructuredMeaning};
use crate::model::{
    find_by_label, sequence_at_mut, validate, Branch, Diagnostic, Fragment, FragmentPath, GatewayKind,
    ModelError, ProcessModel, Sequence, ViolationCode,
};

/// Conditional branch added next to an embedded fragment.
pub const SKIP_CONDITION: &str = "else";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("input model is not well-formed: {0:?}")]
    InvalidModel(Vec<Diagnostic>),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("no task or subprocess labelled '{0}'")]
    NotFound(String),
    #[error("label '{0}' already exists in the model")]
    DuplicateLabel(String),
    #[error("targets are not contiguous in one sequence: {0}")]
    NotContiguous(String),
    #[error("'{0}' is not a subprocess")]
    NotASubprocess(String),
    #[error("'{0}' is not a task")]
    NotATask(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("no matching gateway: {0}")]
    NoSuchGateway(String),
    #[error("gateway has no branch '{0}'")]
    NoSuchBranch(String),
    #[error("no condition '{0}'")]
    NoSuchCondition(String),
    #[error("cannot delete the last branch of a gateway")]
    LastBranch,
    #[error("gateway is already of kind {0}")]
    KindUnchanged(GatewayKind),
    #[error("change would leave an ill-formed model: {0:?}")]
    WouldViolateInvariant(Vec<Diagnostic>),
}

impl From<ModelError> for PatternError {
    fn from(err: ModelError) -> Self {
        match err {
            ModelError::NotFound(label) => PatternError::NotFound(label),
            ModelError::EmptyLabel => PatternError::InvalidParameters("empty label".into()),
        }
    }
}

type Result<T> = std::result::Result<T, PatternError>;

/// Applies one parameterised change pattern.
pub fn apply_pattern(model: &ProcessModel, meaning: &StructuredMeaning) -> Result<ProcessModel> {
    let diagnostics = validate(model);
    if !diagnostics.is_empty() {
        return Err(PatternError::InvalidModel(diagnostics));
    }
    meaning.check().map_err(|e| PatternError::InvalidParameters(e.to_string()))?;

    let mut out = model.clone();
    let introduced = edit(&mut out, meaning)?;

    let counts = label_counts(&out);
    for label in &introduced {
        if counts.get(label.as_str()).copied().unwrap_or(0) > 1 {
            return Err(PatternError::DuplicateLabel(label.clone()));
        }
    }
    let mut diagnostics = validate(&out);
    if out.body.is_empty() {
        // Only a freshly created model may be empty.
        diagnostics.insert(
            0,
            Diagnostic {
                path: FragmentPath(Vec::new()),
                code: ViolationCode::EmptyBody,
                message: "process body must not be empty".into(),
            },
        );
    }
    if !diagnostics.is_empty() {
        return Err(PatternError::WouldViolateInvariant(diagnostics));
    }
    Ok(out)
}

/// Performs the edit and returns the labels it introduced.
fn edit(model: &mut ProcessModel, meaning: &StructuredMeaning) -> Result<Vec<String>> {
    use StructuredMeaning as M;
    match meaning {
        M::Insert { new_label, position } => {
            let (addr, index) = slot(model, position)?;
            seq_mut(model, &addr).insert(index, Fragment::task(new_label));
            Ok(vec![new_label.clone()])
        }
        M::Delete { label } => {
            let path = find_by_label(model, label)?;
            remove(model, &path);
            Ok(Vec::new())
        }
        M::Move { label, position } => {
            if position.labels().contains(&label.as_str()) {
                return Err(PatternError::InvalidParameters(format!("cannot move '{label}' relative to itself")));
            }
            let path = find_by_label(model, label)?;
            let fragment = remove(model, &path);
            if fragment.labels().iter().any(|l| position.labels().contains(&l.as_str())) {
                return Err(PatternError::InvalidTarget(format!("'{label}' contains the anchor of the new position")));
            }
            let (addr, index) = slot(model, position)?;
            seq_mut(model, &addr).insert(index, fragment);
            Ok(Vec::new())
        }
        M::Replace { label, new_labels } => {
            let path = find_by_label(model, label)?;
            splice(model, &path, 1, new_labels.iter().map(Fragment::task).collect());
            Ok(new_labels.clone())
        }
        M::Swap { label_a, label_b } => {
            let a = find_by_label(model, label_a)?;
            let b = find_by_label(model, label_b)?;
            if a.is_ancestor_of(&b) || b.is_ancestor_of(&a) {
                return Err(PatternError::InvalidTarget(format!("'{label_a}' and '{label_b}' are nested")));
            }
            let fa = model.get(&a).cloned().expect("resolved path");
            let fb = model.get(&b).cloned().expect("resolved path");
            *fragment_mut(model, &a) = fb;
            *fragment_mut(model, &b) = fa;
            Ok(Vec::new())
        }
        M::ExtractSubprocess { from_label, to_label, sub_label } => {
            let from = find_by_label(model, from_label)?;
            let to = find_by_label(model, to_label)?;
            let (fa, fi) = from.split().expect("non-empty path");
            let (ta, ti) = to.split().expect("non-empty path");
            if fa != ta {
                return Err(PatternError::NotContiguous(format!(
                    "'{from_label}' and '{to_label}' are not in the same sequence"
                )));
            }
            let addr = fa.to_vec();
            let (start, end) = (fi.min(ti), fi.max(ti));
            let seq = seq_mut(model, &addr);
            let body: Sequence = seq.drain(start..=end).collect();
            seq.insert(start, Fragment::subprocess(sub_label, body));
            Ok(vec![sub_label.clone()])
        }
        M::InlineSubprocess { sub_label } => {
            let path = find_by_label(model, sub_label)?;
            let body = match model.get(&path) {
                Some(Fragment::Subprocess { body, .. }) => body.clone(),
                _ => return Err(PatternError::NotASubprocess(sub_label.clone())),
            };
            splice(model, &path, 1, body);
            Ok(Vec::new())
        }
        M::EmbedLoopPre { label, condition } => {
            wrap(model, label, |f| Fragment::loop_pre(condition, vec![f]))?;
            Ok(Vec::new())
        }
        M::EmbedLoopPost { label, condition } => {
            wrap(model, label, |f| Fragment::loop_post(condition, vec![f]))?;
            Ok(Vec::new())
        }
        M::EmbedConditional { label, condition } => {
            wrap(model, label, |f| {
                Fragment::xor(vec![Branch::xor(condition, vec![f]), Branch::xor(SKIP_CONDITION, Vec::new())])
            })?;
            Ok(Vec::new())
        }
        M::Parallelize { labels } => {
            let (addr, start, end) = contiguous(model, labels)?;
            let seq = seq_mut(model, &addr);
            let branches = seq.drain(start..=end).map(|f| Branch::and(vec![f])).collect();
            seq.insert(start, Fragment::and(branches));
            Ok(Vec::new())
        }
        M::UpdateCondition { target, new_condition } => {
            update_condition(model, target, new_condition)?;
            Ok(Vec::new())
        }
        M::Copy { label, new_label, position } => {
            let path = find_by_label(model, label)?;
            let mut copy = model.get(&path).cloned().expect("resolved path");
            match &mut copy {
                Fragment::Task(l) | Fragment::Subprocess { label: l, .. } => *l = new_label.clone(),
                _ => unreachable!("labels only name tasks and subprocesses"),
            }
            let introduced = copy.labels();
            let (addr, index) = slot(model, position)?;
            seq_mut(model, &addr).insert(index, copy);
            Ok(introduced)
        }
        M::SplitTask { label, new_labels } => {
            let path = find_by_label(model, label)?;
            if !matches!(model.get(&path), Some(Fragment::Task(_))) {
                return Err(PatternError::NotATask(label.clone()));
            }
            splice(model, &path, 1, new_labels.iter().map(Fragment::task).collect());
            Ok(new_labels.clone())
        }
        M::MergeTasks { labels, new_label } => {
            match contiguous(model, labels) {
                Ok((addr, start, end)) => {
                    let seq = seq_mut(model, &addr);
                    seq.drain(start..=end);
                    seq.insert(start, Fragment::task(new_label));
                }
                Err(PatternError::NotContiguous(reason)) => {
                    let gateway = whole_gateway_of_tasks(model, labels).ok_or(PatternError::NotContiguous(reason))?;
                    splice(model, &gateway, 1, vec![Fragment::task(new_label)]);
                }
                Err(other) => return Err(other),
            }
            Ok(vec![new_label.clone()])
        }
        M::DeleteBranch { gateway, branch_condition } => {
            let path = resolve_gateway(model, gateway)?;
            let index = branch_index(model, &path, branch_condition)?;
            let Some(Fragment::Gateway { branches, .. }) = fragment_opt_mut(model, &path) else {
                unreachable!("resolved gateway path")
            };
            if branches.len() <= 1 {
                return Err(PatternError::LastBranch);
            }
            branches.remove(index);
            if branches.len() == 1 {
                let body = branches.remove(0).body;
                splice(model, &path, 1, body);
            }
            Ok(Vec::new())
        }
        M::LeaveSingleBranch { gateway, keep_condition } => {
            let path = resolve_gateway(model, gateway)?;
            let index = branch_index(model, &path, keep_condition)?;
            let Some(Fragment::Gateway { branches, .. }) = model.get(&path) else {
                unreachable!("resolved gateway path")
            };
            let body = branches[index].body.clone();
            splice(model, &path, 1, body);
            Ok(Vec::new())
        }
        M::ReplaceGateways { gateway, new_kind, conditions } => {
            let path = resolve_gateway(model, gateway)?;
            let Some(Fragment::Gateway { kind, branches }) = fragment_opt_mut(model, &path) else {
                unreachable!("resolved gateway path")
            };
            if kind == new_kind {
                return Err(PatternError::KindUnchanged(*kind));
            }
            match new_kind {
                GatewayKind::And => branches.iter_mut().for_each(|b| b.condition = None),
                GatewayKind::Xor => {
                    let conditions = conditions.as_ref().ok_or_else(|| {
                        PatternError::InvalidParameters("switching to xor needs one condition per branch".into())
                    })?;
                    if conditions.len() != branches.len() {
                        return Err(PatternError::InvalidParameters(format!(
                            "{} condition(s) given for {} branches",
                            conditions.len(),
                            branches.len()
                        )));
                    }
                    for (branch, condition) in branches.iter_mut().zip(conditions) {
                        branch.condition = Some(condition.clone());
                    }
                }
            }
            *kind = *new_kind;
            Ok(Vec::new())
        }
        M::Rename { label, new_label } => {
            let path = find_by_label(model, label)?;
            match fragment_mut(model, &path) {
                Fragment::Task(l) | Fragment::Subprocess { label: l, .. } => *l = new_label.clone(),
                _ => unreachable!("labels only name tasks and subprocesses"),
            }
            Ok(vec![new_label.clone()])
        }
    }
}

fn label_counts(model: &ProcessModel) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for fragment in &model.body {
        for label in fragment.labels() {
            *counts.entry(label).or_insert(0) += 1;
        }
    }
    counts
}

fn seq_mut<'a>(model: &'a mut ProcessModel, addr: &[usize]) -> &'a mut Sequence {
    sequence_at_mut(&mut model.body, addr).expect("address resolved against this model")
}

fn fragment_opt_mut<'a>(model: &'a mut ProcessModel, path: &FragmentPath) -> Option<&'a mut Fragment> {
    let (addr, index) = path.split()?;
    sequence_at_mut(&mut model.body, addr)?.get_mut(index)
}

fn fragment_mut<'a>(model: &'a mut ProcessModel, path: &FragmentPath) -> &'a mut Fragment {
    fragment_opt_mut(model, path).expect("path resolved against this model")
}

fn remove(model: &mut ProcessModel, path: &FragmentPath) -> Fragment {
    let (addr, index) = path.split().expect("non-empty path");
    seq_mut(model, addr).remove(index)
}

/// Replaces `count` fragments starting at `path` with `with`.
fn splice(model: &mut ProcessModel, path: &FragmentPath, count: usize, with: Sequence) {
    let (addr, index) = path.split().expect("non-empty path");
    seq_mut(model, addr).splice(index..index + count, with);
}

fn wrap(model: &mut ProcessModel, label: &str, wrapper: impl FnOnce(Fragment) -> Fragment) -> Result<()> {
    let path = find_by_label(model, label)?;
    let slot = fragment_mut(model, &path);
    let inner = std::mem::replace(slot, Fragment::Task(String::new()));
    *slot = wrapper(inner);
    Ok(())
}

/// Sequence address and insertion index for a position.
fn slot(model: &ProcessModel, position: &Position) -> Result<(Vec<usize>, usize)> {
    match position {
        Position::Before { label } => {
            let path = find_by_label(model, label)?;
            let (addr, index) = path.split().expect("non-empty path");
            Ok((addr.to_vec(), index))
        }
        Position::After { label } => {
            let path = find_by_label(model, label)?;
            let (addr, index) = path.split().expect("non-empty path");
            Ok((addr.to_vec(), index + 1))
        }
        Position::Between { label_a, label_b } => {
            let a = find_by_label(model, label_a)?;
            let b = find_by_label(model, label_b)?;
            let (aa, ai) = a.split().expect("non-empty path");
            let (ba, bi) = b.split().expect("non-empty path");
            if aa == ba && (bi == ai + 1 || ai == bi + 1) {
                Ok((aa.to_vec(), ai.max(bi)))
            } else {
                Err(PatternError::NotContiguous(format!("'{label_a}' and '{label_b}' are not direct neighbours")))
            }
        }
    }
}

/// Checks that `labels` occupy exactly a contiguous range of one sequence.
fn contiguous(model: &ProcessModel, labels: &[String]) -> Result<(Vec<usize>, usize, usize)> {
    let mut addr: Option<Vec<usize>> = None;
    let mut indices = Vec::with_capacity(labels.len());
    for label in labels {
        let path = find_by_label(model, label)?;
        let (a, i) = path.split().expect("non-empty path");
        match &addr {
            None => addr = Some(a.to_vec()),
            Some(existing) if existing.as_slice() != a => {
                return Err(PatternError::NotContiguous(format!("'{label}' is in a different sequence")));
            }
            Some(_) => {}
        }
        indices.push(i);
    }
    indices.sort_unstable();
    let before = indices.len();
    indices.dedup();
    if indices.len() != before {
        return Err(PatternError::InvalidParameters("a label is listed twice".into()));
    }
    let (start, end) = (indices[0], indices[indices.len() - 1]);
    if end - start + 1 != indices.len() {
        return Err(PatternError::NotContiguous("other elements lie between the targets".into()));
    }
    Ok((addr.expect("at least two labels"), start, end))
}

/// Path of a gateway whose branches are exactly the given single tasks.
fn whole_gateway_of_tasks(model: &ProcessModel, labels: &[String]) -> Option<FragmentPath> {
    let first = find_by_label(model, labels.first()?).ok()?;
    let idx = first.indices();
    if idx.len() < 3 || idx[idx.len() - 1] != 0 {
        return None;
    }
    let gateway = FragmentPath(idx[..idx.len() - 2].to_vec());
    let Some(Fragment::Gateway { branches, .. }) = model.get(&gateway) else {
        return None;
    };
    if branches.len() != labels.len() {
        return None;
    }
    let mut covered: Vec<&str> = Vec::new();
    for branch in branches {
        match branch.body.as_slice() {
            [Fragment::Task(label)] if labels.contains(label) => covered.push(label),
            _ => return None,
        }
    }
    covered.sort_unstable();
    covered.dedup();
    (covered.len() == labels.len()).then_some(gateway)
}

/// Fragment paths of all ancestors of `path`, outermost first.
fn ancestors(model: &ProcessModel, path: &FragmentPath) -> Vec<FragmentPath> {
    let idx = path.indices();
    let mut out = Vec::new();
    let mut seq = &model.body;
    let mut pos = 0;
    while pos < idx.len() {
        let fragment = &seq[idx[pos]];
        pos += 1;
        if pos == idx.len() {
            break;
        }
        out.push(FragmentPath(idx[..pos].to_vec()));
        seq = match fragment {
            Fragment::Gateway { branches, .. } => {
                let b = idx[pos];
                pos += 1;
                &branches[b].body
            }
            Fragment::Subprocess { body, .. } | Fragment::LoopPre { body, .. } | Fragment::LoopPost { body, .. } => body,
            Fragment::Task(_) => unreachable!("tasks have no children"),
        };
    }
    out
}

fn gateway_paths(seq: &Sequence, prefix: &mut Vec<usize>, kind: GatewayKind, out: &mut Vec<FragmentPath>) {
    for (i, fragment) in seq.iter().enumerate() {
        prefix.push(i);
        match fragment {
            Fragment::Task(_) => {}
            Fragment::Gateway { kind: k, branches } => {
                if *k == kind {
                    out.push(FragmentPath(prefix.clone()));
                }
                for (b, branch) in branches.iter().enumerate() {
                    prefix.push(b);
                    gateway_paths(&branch.body, prefix, kind, out);
                    prefix.pop();
                }
            }
            Fragment::Subprocess { body, .. } | Fragment::LoopPre { body, .. } | Fragment::LoopPost { body, .. } => {
                gateway_paths(body, prefix, kind, out)
            }
        }
        prefix.pop();
    }
}

/// Resolves a gateway reference to the path of its block.
pub fn resolve_gateway(model: &ProcessModel, gateway: &GatewayRef) -> Result<FragmentPath> {
    match gateway {
        GatewayRef::ByOrdinal { kind, index } => {
            let mut all = Vec::new();
            gateway_paths(&model.body, &mut Vec::new(), *kind, &mut all);
            index
                .checked_sub(1)
                .and_then(|i| all.get(i).cloned())
                .ok_or_else(|| PatternError::NoSuchGateway(format!("{kind} gateway #{index} (model has {})", all.len())))
        }
        GatewayRef::ByContainedLabel { label } => {
            let path = find_by_label(model, label)?;
            ancestors(model, &path)
                .into_iter()
                .rev()
                .find(|p| matches!(model.get(p), Some(Fragment::Gateway { .. })))
                .ok_or_else(|| PatternError::NoSuchGateway(format!("no gateway contains '{label}'")))
        }
    }
}

/// Exclusive branches are addressed by condition (exact, then ignoring
/// case); parallel branches by a label they contain.
fn branch_index(model: &ProcessModel, gateway: &FragmentPath, wanted: &str) -> Result<usize> {
    let Some(Fragment::Gateway { kind, branches }) = model.get(gateway) else {
        return Err(PatternError::NoSuchGateway(gateway.to_string()));
    };
    let found = match kind {
        GatewayKind::Xor => branches
            .iter()
            .position(|b| b.condition.as_deref() == Some(wanted))
            .or_else(|| {
                branches
                    .iter()
                    .position(|b| b.condition.as_deref().is_some_and(|c| c.eq_ignore_ascii_case(wanted)))
            }),
        GatewayKind::And => branches
            .iter()
            .position(|b| b.body.iter().any(|f| f.labels().iter().any(|l| l == wanted))),
    };
    found.ok_or_else(|| PatternError::NoSuchBranch(wanted.to_string()))
}

fn update_condition(model: &mut ProcessModel, target: &ConditionRef, new_condition: &str) -> Result<()> {
    match target {
        ConditionRef::GatewayBranch { gateway, old_condition } => {
            let path = resolve_gateway(model, gateway)?;
            let Some(Fragment::Gateway { kind, .. }) = model.get(&path) else {
                unreachable!("resolved gateway path")
            };
            if *kind == GatewayKind::And {
                return Err(PatternError::NoSuchCondition(format!("parallel gateways have no condition '{old_condition}'")));
            }
            let index = branch_index(model, &path, old_condition)
                .map_err(|_| PatternError::NoSuchCondition(old_condition.clone()))?;
            let Some(Fragment::Gateway { branches, .. }) = fragment_opt_mut(model, &path) else {
                unreachable!("resolved gateway path")
            };
            branches[index].condition = Some(new_condition.to_string());
        }
        ConditionRef::Loop { containing_label } => {
            let path = find_by_label(model, containing_label)?;
            let loop_path = ancestors(model, &path)
                .into_iter()
                .rev()
                .find(|p| matches!(model.get(p), Some(Fragment::LoopPre { .. } | Fragment::LoopPost { .. })))
                .ok_or_else(|| PatternError::NoSuchCondition(format!("no loop contains '{containing_label}'")))?;
            match fragment_mut(model, &loop_path) {
                Fragment::LoopPre { condition, .. } | Fragment::LoopPost { condition, .. } => {
                    *condition = new_condition.to_string()
                }
                _ => unreachable!("matched a loop"),
            }
        }
    }
    Ok(())
}
