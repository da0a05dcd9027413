// SPDX-License-Identifier: Apache-2.0

//! Random well-formed models, applicable change requests for them, the
//! golden-case file format and hand-counted outcome tables. Enabled by the
//! `testkit` feature.
//!
//! Golden case files hold three sections:
//!
//! ```text
//! # free-form comment lines
//! --- input
//! process "P"
//!   task "A"
//! --- meaning
//! {"pattern":"lp6","params":{"label":"A","new_label":"B"}}
//! --- expected
//! process "P"
//!   task "B"
//! ```

use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::evaluation::{classify_flags, CpmrOutcome, Observation};
use crate::model::{Branch, Fragment, FragmentPath, GatewayKind, ProcessModel, Sequence};
use crate::patterns::{ConditionRef, GatewayRef, PatternId, Position, StructuredMeaning};

/// Size knobs for [`random_model`].
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_seq: usize,
    pub max_branches: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_depth: 3, max_seq: 4, max_branches: 3 }
    }
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    config: GenConfig,
    labels: usize,
    conditions: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn label(&mut self) -> String {
        self.labels += 1;
        format!("T{}", self.labels)
    }

    fn condition(&mut self) -> String {
        self.conditions += 1;
        format!("c{}", self.conditions)
    }

    fn sequence(&mut self, depth: usize, min: usize) -> Sequence {
        let n = self.rng.random_range(min..=self.config.max_seq.max(min));
        (0..n).map(|_| self.fragment(depth)).collect()
    }

    fn fragment(&mut self, depth: usize) -> Fragment {
        // Tasks dominate, more so deeper down, so that models stay small.
        let choice = if depth >= self.config.max_depth { 0 } else { self.rng.random_range(0..10 + 6 * depth) };
        let branches = |g: &mut Self, kind: GatewayKind| {
            let n = g.rng.random_range(2..=g.config.max_branches.max(2));
            (0..n)
                .map(|_| match kind {
                    GatewayKind::Xor => {
                        let c = g.condition();
                        Branch::xor(c, g.sequence(depth + 1, 0))
                    }
                    GatewayKind::And => Branch::and(g.sequence(depth + 1, 1)),
                })
                .collect()
        };
        match choice {
            5 => {
                let label = self.label();
                Fragment::subprocess(label, self.sequence(depth + 1, 1))
            }
            6 => Fragment::xor(branches(self, GatewayKind::Xor)),
            7 => Fragment::and(branches(self, GatewayKind::And)),
            8 => {
                let c = self.condition();
                Fragment::loop_pre(c, self.sequence(depth + 1, 1))
            }
            9 => {
                let c = self.condition();
                Fragment::loop_post(c, self.sequence(depth + 1, 1))
            }
            _ => Fragment::task(self.label()),
        }
    }
}

/// A model that passes `validate`: unique labels `T1..`, unique conditions
/// `c1..`, non-empty bodies and parallel branches.
pub fn random_model<R: Rng>(rng: &mut R, config: GenConfig) -> ProcessModel {
    let mut g = Gen { rng, config, labels: 0, conditions: 0 };
    let body = g.sequence(0, 1);
    ProcessModel::new("Random", body)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Container {
    Root,
    Body,
    XorBranch,
    AndBranch,
}

struct Site<'m> {
    path: FragmentPath,
    fragment: &'m Fragment,
    siblings: &'m Sequence,
    container: Container,
}

impl Site<'_> {
    /// Removing this fragment leaves its sequence legal.
    fn removable(&self) -> bool {
        self.siblings.len() > 1 || self.container == Container::XorBranch
    }
}

fn sites(model: &ProcessModel) -> Vec<Site<'_>> {
    fn walk<'m>(seq: &'m Sequence, prefix: &mut Vec<usize>, container: Container, out: &mut Vec<Site<'m>>) {
        for (i, fragment) in seq.iter().enumerate() {
            prefix.push(i);
            out.push(Site { path: FragmentPath(prefix.clone()), fragment, siblings: seq, container });
            match fragment {
                Fragment::Task(_) => {}
                Fragment::Gateway { kind, branches } => {
                    let inner = match kind {
                        GatewayKind::Xor => Container::XorBranch,
                        GatewayKind::And => Container::AndBranch,
                    };
                    for (b, branch) in branches.iter().enumerate() {
                        prefix.push(b);
                        walk(&branch.body, prefix, inner, out);
                        prefix.pop();
                    }
                }
                Fragment::Subprocess { body, .. } | Fragment::LoopPre { body, .. } | Fragment::LoopPost { body, .. } => {
                    walk(body, prefix, Container::Body, out)
                }
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(&model.body, &mut Vec::new(), Container::Root, &mut out);
    out
}

/// Change requests whose structural preconditions hold on `model`, one or
/// more per pattern where the model offers a target. New labels and
/// conditions are fresh.
pub fn applicable_meanings(model: &ProcessModel) -> Vec<StructuredMeaning> {
    use StructuredMeaning as M;
    let all = sites(model);
    let labelled: Vec<&Site> = all.iter().filter(|s| s.fragment.label().is_some()).collect();
    let tasks: Vec<&Site> = labelled.iter().copied().filter(|s| matches!(s.fragment, Fragment::Task(_))).collect();
    let name = |s: &Site| s.fragment.label().expect("labelled").to_string();
    let fresh = |k: usize| format!("N{k}");
    let mut out = Vec::new();

    for s in &labelled {
        let l = name(s);
        out.push(M::Insert { new_label: fresh(0), position: Position::after(&l) });
        out.push(M::Insert { new_label: fresh(0), position: Position::before(&l) });
        out.push(M::Replace { label: l.clone(), new_labels: vec![fresh(1), fresh(2)] });
        out.push(M::EmbedLoopPre { label: l.clone(), condition: "again".into() });
        out.push(M::EmbedLoopPost { label: l.clone(), condition: "again".into() });
        out.push(M::EmbedConditional { label: l.clone(), condition: "when".into() });
        out.push(M::Rename { label: l.clone(), new_label: fresh(3) });
        if s.removable() {
            out.push(M::Delete { label: l.clone() });
            for anchor in &labelled {
                if anchor.path != s.path && !s.path.is_ancestor_of(&anchor.path) {
                    out.push(M::Move { label: l.clone(), position: Position::after(name(anchor)) });
                }
            }
        }
        for other in &labelled {
            if other.path > s.path && !s.path.is_ancestor_of(&other.path) && !other.path.is_ancestor_of(&s.path) {
                out.push(M::Swap { label_a: l.clone(), label_b: name(other) });
            }
        }
        if let Fragment::Subprocess { .. } = s.fragment {
            out.push(M::InlineSubprocess { sub_label: l.clone() });
        }
    }

    for s in &tasks {
        let l = name(s);
        out.push(M::SplitTask { label: l.clone(), new_labels: vec![fresh(4), fresh(5)] });
        out.push(M::Copy { label: l.clone(), new_label: fresh(6), position: Position::before(name(labelled[0])) });
        out.push(M::Copy { label: l.clone(), new_label: fresh(6), position: Position::after(&l) });
    }

    // Runs of labelled neighbours.
    for s in &all {
        let (_, i) = s.path.split().expect("non-empty");
        let Some(next) = s.siblings.get(i + 1) else { continue };
        let (Some(a), Some(b)) = (s.fragment.label(), next.label()) else { continue };
        out.push(M::Insert { new_label: fresh(0), position: Position::between(a, b) });
        out.push(M::ExtractSubprocess { from_label: a.into(), to_label: b.into(), sub_label: fresh(7) });
        out.push(M::Parallelize { labels: vec![a.into(), b.into()] });
        if matches!(s.fragment, Fragment::Task(_)) && matches!(next, Fragment::Task(_)) {
            out.push(M::MergeTasks { labels: vec![a.into(), b.into()], new_label: fresh(8) });
        }
    }

    let mut ordinals = [0usize; 2];
    for s in &all {
        match s.fragment {
            Fragment::Gateway { kind, branches } => {
                let slot = if *kind == GatewayKind::Xor { 0 } else { 1 };
                ordinals[slot] += 1;
                let gateway = GatewayRef::nth(*kind, ordinals[slot]);
                let flattening_ok = |body: &Sequence| !body.is_empty() || s.removable();
                for (b, branch) in branches.iter().enumerate() {
                    let key = branch.condition.clone().unwrap_or_else(|| match branch.body.first().and_then(|f| f.label()) {
                        Some(l) => l.to_string(),
                        None => String::new(),
                    });
                    if key.is_empty() {
                        continue;
                    }
                    let keep = branches.len() > 2 || flattening_ok(&branches[1 - b].body);
                    if keep {
                        out.push(M::DeleteBranch { gateway: gateway.clone(), branch_condition: key.clone() });
                    }
                    if flattening_ok(&branch.body) {
                        out.push(M::LeaveSingleBranch { gateway: gateway.clone(), keep_condition: key.clone() });
                    }
                    if let Some(old) = &branch.condition {
                        out.push(M::UpdateCondition {
                            target: ConditionRef::GatewayBranch { gateway: gateway.clone(), old_condition: old.clone() },
                            new_condition: "updated".into(),
                        });
                    }
                }
                match kind {
                    GatewayKind::Xor if branches.iter().all(|b| !b.body.is_empty()) => {
                        out.push(M::ReplaceGateways { gateway, new_kind: GatewayKind::And, conditions: None });
                    }
                    GatewayKind::Xor => {}
                    GatewayKind::And => out.push(M::ReplaceGateways {
                        gateway,
                        new_kind: GatewayKind::Xor,
                        conditions: Some((0..branches.len()).map(|i| format!("k{i}")).collect()),
                    }),
                }
                let labels: Vec<String> = branches
                    .iter()
                    .filter_map(|b| match b.body.as_slice() {
                        [Fragment::Task(l)] => Some(l.clone()),
                        _ => None,
                    })
                    .collect();
                if labels.len() == branches.len() {
                    out.push(M::MergeTasks { labels, new_label: fresh(9) });
                }
            }
            Fragment::LoopPre { body, .. } | Fragment::LoopPost { body, .. } => {
                if let Some(l) = body.iter().find_map(|f| f.label()) {
                    out.push(M::UpdateCondition {
                        target: ConditionRef::Loop { containing_label: l.to_string() },
                        new_condition: "updated".into(),
                    });
                }
            }
            _ => {}
        }
    }
    out.retain(|m| m.check().is_ok());
    out
}

/// One of [`applicable_meanings`], or `None` for a model offering nothing.
pub fn random_applicable<R: Rng>(model: &ProcessModel, rng: &mut R) -> Option<StructuredMeaning> {
    applicable_meanings(model).choose(rng).cloned()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenCase {
    pub name: String,
    pub input: String,
    pub meaning: String,
    pub expected: String,
}

pub fn parse_golden(name: &str, text: &str) -> Result<GoldenCase, String> {
    let mut sections: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if let Some(header) = line.strip_prefix("--- ") {
            sections.push((header.trim().to_string(), String::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push_str(line);
            body.push('\n');
        } else if !(line.starts_with('#') || line.trim().is_empty()) {
            return Err(format!("{name}: text before the first section"));
        }
    }
    let take = |key: &str| {
        sections
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| format!("{name}: missing '--- {key}' section"))
    };
    Ok(GoldenCase {
        name: name.to_string(),
        input: take("input")?,
        meaning: take("meaning")?.trim().to_string(),
        expected: take("expected")?,
    })
}

/// All `*.case` files in `dir`, sorted by file name.
pub fn load_golden_dir(dir: &Path) -> Result<Vec<GoldenCase>, String> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "case"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            parse_golden(&p.file_stem().unwrap_or_default().to_string_lossy(), &text)
        })
        .collect()
}

#[derive(serde::Deserialize)]
struct OutcomeRow {
    record_id: String,
    pattern_expected: PatternId,
    backend: String,
    identified: Option<PatternId>,
    step_2: Option<String>,
    step_3: Option<String>,
    baseline: String,
}

fn flag(cell: Option<&str>) -> Result<Option<bool>, String> {
    match cell.map(str::trim) {
        None | Some("") => Ok(None),
        Some("T") => Ok(Some(true)),
        Some("F") => Ok(Some(false)),
        Some(other) => Err(format!("expected T, F or empty, got '{other}'")),
    }
}

/// Reads an outcome table: one row per (record, backend) with columns
/// `record_id,pattern_expected,backend,identified,step_2,step_3,baseline`.
/// An empty `identified` means no pattern was identified; steps are `T`, `F`
/// or empty when not reached.
pub fn load_outcomes(path: &Path) -> Result<Vec<Observation>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<OutcomeRow>().enumerate() {
        let at = |e: String| format!("{} row {}: {e}", path.display(), i + 2);
        let row = row.map_err(|e| at(e.to_string()))?;
        let step_1b = row.identified.map(|p| p == row.pattern_expected);
        let step_2 = flag(row.step_2.as_deref()).map_err(at)?;
        let step_3 = flag(row.step_3.as_deref()).map_err(at)?;
        let category = classify_flags(row.identified.is_some(), step_1b, step_2, step_3).map_err(|e| at(e.to_string()))?;
        let baseline = flag(Some(&row.baseline)).map_err(at)?.ok_or_else(|| at("baseline verdict missing".into()))?;
        out.push(Observation {
            record_id: row.record_id,
            pattern: row.pattern_expected,
            backend: row.backend,
            baseline_correct: Some(baseline),
            cpmr: Some(CpmrOutcome { identified: row.identified, category, aao_equals_eao: step_3 == Some(true) }),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use super::*;
    use crate::model::validate;

    #[test]
    fn generated_models_are_valid() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_model(&mut rng, GenConfig::default());
            assert!(validate(&m).is_empty(), "{m:?}");
        }
    }

    #[test]
    fn every_pattern_is_offered_somewhere() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..300 {
            let m = random_model(&mut rng, GenConfig::default());
            seen.extend(applicable_meanings(&m).iter().map(|m| m.pattern()));
        }
        assert_eq!(seen.len(), crate::patterns::PatternId::ALL.len());
    }

    #[test]
    fn golden_sections() {
        let case = parse_golden("x", "# c\n--- input\nprocess \"P\"\n  task \"A\"\n--- meaning\n{}\n--- expected\nprocess \"P\"\n").unwrap();
        assert_eq!(case.input, "process \"P\"\n  task \"A\"\n");
        assert_eq!(case.meaning, "{}");
        assert!(parse_golden("y", "--- input\n").is_err());
    }
}
