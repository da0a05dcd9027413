// SPDX-License-Identifier: Apache-2.0

//! Offline backend: keyword rules for identification, regular expressions
//! for parameter extraction, and the deterministic engine for application.
//!
//! Labels and conditions in wordings are single words or quoted text
//! (`task 'Check invoice'`).

use std::sync::LazyLock;

use regex::{Captures, Regex};

use super::backend::{Backend, BackendError, Stage, StageRequest};
use super::Meaning;
use crate::dsl::serialize_dsl;
use crate::model::{GatewayKind, ProcessModel};
use crate::patterns::{apply_pattern, ConditionRef, GatewayRef, PatternId, Position, StructuredMeaning};

pub const NA: &str = "NA";

#[derive(Debug, Default, Clone, Copy)]
pub struct MockBackend;

impl MockBackend {
    pub fn new() -> Self {
        MockBackend
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &StageRequest) -> Result<String, BackendError> {
        let ctx = &request.context;
        let wording = ctx.wording.as_deref().unwrap_or_default();
        let reply = match request.stage {
            Stage::Identify => {
                let catalog = if ctx.catalog.is_empty() { PatternId::ALL.to_vec() } else { ctx.catalog.clone() };
                identify(wording, &catalog).map(|id| id.to_string())
            }
            Stage::Derive => ctx.pattern.and_then(|p| derive(p, wording)).map(|m| m.to_json()),
            Stage::Apply => match (&ctx.model, &ctx.meaning) {
                (Some(model), Some(Meaning::Structured(m))) => apply(model, m),
                (Some(model), Some(Meaning::NaturalLanguage(text))) => interpret(text).and_then(|m| apply(model, &m)),
                _ => None,
            },
            Stage::Baseline => ctx.model.as_ref().and_then(|model| interpret(wording).and_then(|m| apply(model, &m))),
        };
        Ok(reply.unwrap_or_else(|| NA.to_string()))
    }
}

fn apply(model: &ProcessModel, meaning: &StructuredMeaning) -> Option<String> {
    apply_pattern(model, meaning).ok().map(|m| serialize_dsl(&m))
}

/// Identify and derive in one go.
pub fn interpret(text: &str) -> Option<StructuredMeaning> {
    identify(text, &PatternId::ALL).and_then(|p| derive(p, text))
}

fn re(pattern: &str) -> Regex {
    Regex::new(&format!("(?i){pattern}")).expect("static pattern")
}

// ---------------------------------------------------------------- identify

struct Rule {
    id: PatternId,
    required: Vec<Regex>,
    forbidden: Vec<Regex>,
}

fn rule(id: PatternId, required: &[&str], forbidden: &[&str]) -> Rule {
    Rule { id, required: required.iter().map(|p| re(p)).collect(), forbidden: forbidden.iter().map(|p| re(p)).collect() }
}

const LOOP_EDIT: [&str; 3] = [r"\b(?:update|change|modify)\b", r"\bcondition\s+of\s+the\s+loop", r"\bloop\s+condition"];
const AT_LEAST_ONCE: &str = r"\bat\s+least\s+once\b|\bpost-?conditional\b|\bdo-while\b";

static RULES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    use PatternId::*;
    let loop_pre_forbid: Vec<&str> = LOOP_EDIT.iter().copied().chain([AT_LEAST_ONCE]).collect();
    vec![
        rule(Cp5, &[r"\b(?:swap|exchange|interchange)"], &[]),
        rule(Cp15, &[r"\bsplit\b"], &[]),
        rule(Cp16, &[r"\b(?:merge|combine|join|summari[sz]e)\b"], &[]),
        rule(Cp18, &[r"\b(?:keep|leave|retain)\s+only\b|\bsingle\s+branch\b|\bonly\s+(?:the\s+)?branch\b"], &[]),
        rule(Cp17, &[r"\b(?:delete|remove|drop)\s+(?:the\s+)?(?:(?:entire|whole|complete)\s+)?branch"], &[]),
        rule(Cp19, &[r"\b(?:replace|convert|turn)\b", r"\bgateway"], &[]),
        rule(Cp13, &[r"\b(?:update|change|modify|edit|adjust)\b.*\bcondition"], &[]),
        rule(Cp8_2, &[r"\bloop", AT_LEAST_ONCE], &LOOP_EDIT),
        rule(Cp8_1, &[r"\bloop"], &loop_pre_forbid),
        rule(Cp10, &[r"\bconditional\s+branch|\bonly\s+(?:be\s+)?(?:executed|performed|run|done)\s+(?:if|when)\b|\boptional\b"], &[r"\bloop"]),
        rule(Cp9, &[r"\bparalleli[sz]e|\bin\s+parallel\b|\bconcurrently\b|\bsimultaneously\b"], &[]),
        rule(Cp7, &[r"\b(?:inline|expand|dissolve|flatten)\b"], &[]),
        rule(Cp6, &[r"\bextract\b|\binto\s+(?:a\s+)?(?:new\s+)?sub-?process\b"], &[]),
        rule(Cp14, &[r"\b(?:copy|duplicate)\b"], &[]),
        rule(Cp3, &[r"\bmove\b"], &[]),
        rule(Cp4, &[r"\breplace\b"], &[r"\bgateway"]),
        rule(Lp6, &[r"\brename\b"], &[r"\bcondition"]),
        rule(Cp1, &[r"\b(?:add|insert)\b"], &[]),
        rule(Cp2, &[r"\b(?:delete|remove|drop|removing|deleting)\b"], &[r"\bbranch"]),
    ]
});

static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"'[^']*'|"[^"]*""#).unwrap());

/// Exactly one matching rule identifies a pattern; none or several is "NA".
pub fn identify(text: &str, catalog: &[PatternId]) -> Option<PatternId> {
    let bare = QUOTED.replace_all(text, " ");
    let mut hits: Vec<PatternId> = RULES
        .iter()
        .filter(|r| r.required.iter().all(|p| p.is_match(&bare)) && !r.forbidden.iter().any(|p| p.is_match(&bare)))
        .map(|r| r.id)
        .collect();
    hits.dedup();
    match hits.as_slice() {
        [one] if catalog.contains(one) => Some(*one),
        _ => None,
    }
}

// ------------------------------------------------------------------ derive

const NOISE: &str = r"(?:(?:the|a|an)\s+)?(?:new\s+)?(?:(?:tasks?|activity|activities|subprocess|sub-process|step)\s+)?";
const TOK: &str = r#"('[^']+'|"[^"]+"|[^\s'",.;:!?()]+)"#;

// Case-sensitive: a capital `A` is a label, not an article.
const STOPWORDS: [&str; 24] = [
    "a", "an", "the", "task", "tasks", "it", "this", "that", "them", "new", "process", "model", "subprocess", "loop",
    "gateway", "branch", "activity", "step", "and", "or", "with", "to", "after", "before",
];

/// Expands `{L}` (label with optional article/kind noise) and `{C}` (bare
/// condition token).
fn pat(template: &str) -> Regex {
    re(&template.replace("{L}", &format!("{NOISE}{TOK}")).replace("{C}", TOK))
}

fn unquote(token: &str) -> Option<String> {
    let inner = if token.len() >= 2
        && ((token.starts_with('\'') && token.ends_with('\'')) || (token.starts_with('"') && token.ends_with('"')))
    {
        token[1..token.len() - 1].trim().to_string()
    } else {
        if STOPWORDS.contains(&token) {
            return None;
        }
        token.to_string()
    };
    (!inner.is_empty()).then_some(inner)
}

fn group(caps: &Captures, i: usize) -> Option<String> {
    unquote(caps.get(i)?.as_str())
}

static POSITION: LazyLock<Regex> = LazyLock::new(|| {
    pat(r"(?:(?:directly|right|immediately|just)\s+)?(?:(after|behind|before|in\s+front\s+of)\s+{L}|between\s+{L}\s+and\s+{L})")
});

/// First position phrase in `text`.
fn position(text: &str) -> Option<Position> {
    let caps = POSITION.captures(text)?;
    if caps.get(1).is_some() {
        let label = group(&caps, 2)?;
        return Some(match caps[1].to_ascii_lowercase().as_str() {
            "after" | "behind" => Position::After { label },
            _ => Position::Before { label },
        });
    }
    Some(Position::Between { label_a: group(&caps, 3)?, label_b: group(&caps, 4)? })
}

static LIST_FIRST: LazyLock<Regex> = LazyLock::new(|| pat(r"^\s*{L}"));
static LIST_NEXT: LazyLock<Regex> = LazyLock::new(|| pat(r"^\s*(?:,\s*(?:and\s+)?|and\s+|&\s*){L}"));

/// `B, C and D` at the start of `text`; returns the labels and the number of
/// bytes consumed.
fn list(text: &str) -> (Vec<String>, usize) {
    let mut out = Vec::new();
    let mut at = 0;
    let mut next = &*LIST_FIRST;
    while let Some(caps) = next.captures(&text[at..]) {
        let Some(label) = group(&caps, 1) else { break };
        out.push(label);
        at += caps.get(0).unwrap().end();
        next = &*LIST_NEXT;
    }
    (out, at)
}

fn list_of_at_least(text: &str, n: usize) -> Option<(Vec<String>, usize)> {
    let (labels, used) = list(text);
    (labels.len() >= n).then_some((labels, used))
}

/// First capture that yields a usable token.
fn first_token(regex: &Regex, text: &str, group_index: usize) -> Option<String> {
    regex.captures_iter(text).find_map(|c| group(&c, group_index))
}

static GATEWAY_CONTAINING: LazyLock<Regex> = LazyLock::new(|| pat(r"\bgateway\s+(?:containing|with|around)\s+{L}"));
static GATEWAY_ORDINAL: LazyLock<Regex> = LazyLock::new(|| {
    re(r"\b(?:(first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth|\d+)(?:st|nd|rd|th)?\s+)?(exclusive|xor|parallel|and)(?:\s+|-)gateway(?:\s+(?:number|no\.?|#)\s*(\d+))?")
});

fn ordinal(word: &str) -> Option<usize> {
    const WORDS: [&str; 10] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];
    WORDS.iter().position(|w| w.eq_ignore_ascii_case(word)).map(|i| i + 1).or_else(|| word.parse().ok())
}

fn kind_word(word: &str) -> GatewayKind {
    match word.to_ascii_lowercase().as_str() {
        "parallel" | "and" => GatewayKind::And,
        _ => GatewayKind::Xor,
    }
}

/// Gateway phrases in order of appearance.
fn gateway_refs(text: &str) -> Vec<GatewayRef> {
    let mut found: Vec<(usize, GatewayRef)> = Vec::new();
    for caps in GATEWAY_CONTAINING.captures_iter(text) {
        if let Some(label) = group(&caps, 1) {
            found.push((caps.get(0).unwrap().start(), GatewayRef::ByContainedLabel { label }));
        }
    }
    for caps in GATEWAY_ORDINAL.captures_iter(text) {
        let index = caps
            .get(1)
            .and_then(|m| ordinal(m.as_str()))
            .or_else(|| caps.get(3).and_then(|m| m.as_str().parse().ok()))
            .unwrap_or(1);
        let kind = kind_word(&caps[2]);
        found.push((caps.get(0).unwrap().start(), GatewayRef::ByOrdinal { kind, index }));
    }
    found.sort_by_key(|(at, _)| *at);
    found.into_iter().map(|(_, g)| g).collect()
}

macro_rules! regexes {
    ($($name:ident = $pattern:expr;)*) => {
        $(static $name: LazyLock<Regex> = LazyLock::new(|| pat($pattern));)*
    };
}

regexes! {
    INSERT = r"\b(?:add|insert)\s+{L}";
    DELETE = r"\b(?:delete|remove|drop)\s+{L}";
    MOVE = r"\bmove\s+{L}";
    REPLACE = r"\breplace\s+{L}\s+(?:with|by)\s+(?:(?:the|a)\s+)?(?:new\s+)?";
    SWAP = r"\b(?:swap|exchange|interchange)\s+(?:the\s+)?(?:(?:positions?|order)\s+of\s+)?{L}\s+(?:and|with)\s+{L}";
    EXTRACT_RANGE = r"\bextract\s+(?:the\s+)?(?:(?:fragment|part|range|section)\s+)?(?:from\s+)?{L}\s+(?:to|and|through|until)\s+{L}\s+(?:in)?to\s+(?:a\s+)?(?:new\s+)?sub-?process\s+(?:called\s+|named\s+)?{L}";
    EXTRACT_ONE = r"\bextract\s+{L}\s+(?:in)?to\s+(?:a\s+)?(?:new\s+)?sub-?process\s+(?:called\s+|named\s+)?{L}";
    INLINE = r"\b(?:inline|expand|dissolve|flatten)\s+{L}";
    WRAP = r"\b(?:embed|put|place|wrap|enclose|repeat)\s+{L}";
    LOOP_CONDITION = r"(?:\bcondition|\bwhile|\bas\s+long\s+as)\s+{C}";
    PARALLELIZE = r"\bparalleli[sz]e\s+(?:the\s+)?";
    EXECUTE = r"\b(?:execute|run|perform|do)\s+";
    IN_PARALLEL = r"^\s*(?:in\s+parallel|concurrently|simultaneously)\b";
    SUBJECT_ONLY = r"^\s*{L}\s+(?:should|must|shall|may|will|is\s+to)\s+(?:be\s+)?only\b";
    EXECUTE_ONLY = r"\b(?:execute|perform|run)\s+{L}\s+only\b";
    ONLY_IF = r"\bonly\s+(?:be\s+)?(?:executed\s+|performed\s+|run\s+|done\s+)?(?:if|when)\s+{C}";
    IF_CONDITION = r"(?:\bif|\bwhen|\bcondition)\s+{C}";
    LOOP_CONDITION_UPDATE = r"\bcondition\s+of\s+(?:the\s+)?loop\s+(?:containing|around|with|of)\s+{L}\s+(?:to|into)\s+{C}";
    OLD_CONDITION = r"\bcondition\s+{C}";
    NEW_VALUE = r"\b(?:to|into|by)\s+{C}";
    COPY = r"\b(?:copy|duplicate)\s+{L}\s+(?:as|to|into|under\s+the\s+name|named|called)\s+(?:a\s+)?(?:new\s+)?(?:task\s+)?(?:named\s+|called\s+)?{L}";
    SPLIT = r"\bsplit\s+{L}\s+(?:up\s+)?into\s+(?:the\s+)?(?:(?:two|three|four|five|\d+|separate|new)\s+)*";
    MERGE = r"\b(?:merge|combine|join|summari[sz]e)\s+";
    MERGE_TARGET = r"^\s*(?:into|to|as)\s+(?:(?:a|an|one|the|single|new|combined|merged)\s+)*(?:task\s+)?(?:named\s+|called\s+)?{C}";
    DELETE_BRANCH = r"\b(?:delete|remove|drop)\s+(?:the\s+)?(?:(?:entire|whole|complete)\s+)?branch\s+(?:(with\s+(?:the\s+)?condition|containing\s+(?:task\s+)?|where\s+)\s*)?{C}";
    KEEP_BRANCH = r"\b(?:keep|leave|retain)\s+only\s+(?:the\s+)?branch\s+(?:(with\s+(?:the\s+)?condition|containing\s+(?:task\s+)?)\s*)?{C}";
    NEW_KIND = r"\b(?:with|into|to|by)\s+(?:an?\s+)?(exclusive|xor|parallel|and)(?:\s+|-)gateway";
    CONDITIONS = r"\bconditions?\s+";
    RENAME = r"\brename\s+{L}\s+(?:to|into|as)\s+{L}";
    RELABEL = r"\bchange\s+(?:the\s+)?(?:label|name)\s+of\s+{L}\s+to\s+{L}";
}

fn wrap_target(text: &str) -> Option<String> {
    first_token(&WRAP, text, 1)
}

/// Extracts the parameters of `pattern` from `text`, or `None` when a
/// parameter is missing.
pub fn derive(pattern: PatternId, text: &str) -> Option<StructuredMeaning> {
    use StructuredMeaning as M;
    let text = text.trim();
    match pattern {
        PatternId::Cp1 => {
            let caps = INSERT.captures(text)?;
            let new_label = group(&caps, 1)?;
            let position = position(&text[caps.get(0)?.end()..])?;
            Some(M::Insert { new_label, position })
        }
        PatternId::Cp2 => Some(M::Delete { label: first_token(&DELETE, text, 1)? }),
        PatternId::Cp3 => {
            let caps = MOVE.captures(text)?;
            let label = group(&caps, 1)?;
            let position = position(&text[caps.get(0)?.end()..])?;
            Some(M::Move { label, position })
        }
        PatternId::Cp4 => {
            let caps = REPLACE.captures(text)?;
            let label = group(&caps, 1)?;
            let (new_labels, _) = list_of_at_least(&text[caps.get(0)?.end()..], 1)?;
            Some(M::Replace { label, new_labels })
        }
        PatternId::Cp5 => {
            let caps = SWAP.captures(text)?;
            Some(M::Swap { label_a: group(&caps, 1)?, label_b: group(&caps, 2)? })
        }
        PatternId::Cp6 => {
            if let Some(caps) = EXTRACT_RANGE.captures(text) {
                return Some(M::ExtractSubprocess {
                    from_label: group(&caps, 1)?,
                    to_label: group(&caps, 2)?,
                    sub_label: group(&caps, 3)?,
                });
            }
            let caps = EXTRACT_ONE.captures(text)?;
            let label = group(&caps, 1)?;
            Some(M::ExtractSubprocess { from_label: label.clone(), to_label: label, sub_label: group(&caps, 2)? })
        }
        PatternId::Cp7 => Some(M::InlineSubprocess { sub_label: first_token(&INLINE, text, 1)? }),
        PatternId::Cp8_1 | PatternId::Cp8_2 => {
            let label = wrap_target(text)?;
            let condition = first_token(&LOOP_CONDITION, text, 1)?;
            Some(if pattern == PatternId::Cp8_1 {
                M::EmbedLoopPre { label, condition }
            } else {
                M::EmbedLoopPost { label, condition }
            })
        }
        PatternId::Cp9 => {
            if let Some(m) = PARALLELIZE.find(text) {
                let (labels, _) = list_of_at_least(&text[m.end()..], 2)?;
                return Some(M::Parallelize { labels });
            }
            EXECUTE.find_iter(text).find_map(|m| {
                let rest = &text[m.end()..];
                let (labels, used) = list_of_at_least(rest, 2)?;
                IN_PARALLEL.is_match(&rest[used..]).then_some(M::Parallelize { labels })
            })
        }
        PatternId::Cp10 => {
            let label = wrap_target(text)
                .or_else(|| first_token(&SUBJECT_ONLY, text, 1))
                .or_else(|| first_token(&EXECUTE_ONLY, text, 1))?;
            let condition = first_token(&ONLY_IF, text, 1).or_else(|| first_token(&IF_CONDITION, text, 1))?;
            Some(M::EmbedConditional { label, condition })
        }
        PatternId::Cp13 => {
            if let Some(caps) = LOOP_CONDITION_UPDATE.captures(text) {
                return Some(M::UpdateCondition {
                    target: ConditionRef::Loop { containing_label: group(&caps, 1)? },
                    new_condition: group(&caps, 2)?,
                });
            }
            let caps = OLD_CONDITION.captures(text)?;
            let old_condition = group(&caps, 1)?;
            let rest = &text[caps.get(0)?.end()..];
            let new_condition = NEW_VALUE.captures_iter(rest).filter_map(|c| group(&c, 1)).last()?;
            let gateway = gateway_refs(text).into_iter().next().unwrap_or(GatewayRef::nth(GatewayKind::Xor, 1));
            Some(M::UpdateCondition { target: ConditionRef::GatewayBranch { gateway, old_condition }, new_condition })
        }
        PatternId::Cp14 => {
            let caps = COPY.captures(text)?;
            let label = group(&caps, 1)?;
            let new_label = group(&caps, 2)?;
            let position = position(&text[caps.get(0)?.end()..])?;
            Some(M::Copy { label, new_label, position })
        }
        PatternId::Cp15 => {
            let caps = SPLIT.captures(text)?;
            let label = group(&caps, 1)?;
            let (new_labels, _) = list_of_at_least(&text[caps.get(0)?.end()..], 2)?;
            Some(M::SplitTask { label, new_labels })
        }
        PatternId::Cp16 => MERGE.find_iter(text).find_map(|m| {
            let rest = &text[m.end()..];
            let (labels, used) = list_of_at_least(rest, 2)?;
            let new_label = first_token(&MERGE_TARGET, &rest[used..], 1)?;
            Some(M::MergeTasks { labels, new_label })
        }),
        PatternId::Cp17 | PatternId::Cp18 => {
            let regex = if pattern == PatternId::Cp17 { &*DELETE_BRANCH } else { &*KEEP_BRANCH };
            let caps = regex.captures(text)?;
            let by_label = caps.get(1).is_some_and(|m| m.as_str().to_ascii_lowercase().starts_with("containing"));
            let branch = group(&caps, 2)?;
            let gateway = match gateway_refs(text).into_iter().next() {
                Some(g) => g,
                None if by_label => GatewayRef::contained(branch.clone()),
                None => GatewayRef::nth(GatewayKind::Xor, 1),
            };
            Some(if pattern == PatternId::Cp17 {
                M::DeleteBranch { gateway, branch_condition: branch }
            } else {
                M::LeaveSingleBranch { gateway, keep_condition: branch }
            })
        }
        PatternId::Cp19 => {
            let new_kind = kind_word(&NEW_KIND.captures_iter(text).last()?[1]);
            let gateway = gateway_refs(text)
                .into_iter()
                .find(|g| !matches!(g, GatewayRef::ByOrdinal { kind, .. } if *kind == new_kind))
                .unwrap_or_else(|| {
                    let from = match new_kind {
                        GatewayKind::Xor => GatewayKind::And,
                        GatewayKind::And => GatewayKind::Xor,
                    };
                    GatewayRef::nth(from, 1)
                });
            let conditions = match new_kind {
                GatewayKind::And => None,
                GatewayKind::Xor => {
                    let m = CONDITIONS.find(text)?;
                    Some(list_of_at_least(&text[m.end()..], 2)?.0)
                }
            };
            Some(M::ReplaceGateways { gateway, new_kind, conditions })
        }
        PatternId::Lp6 => {
            let caps = RENAME.captures(text).or_else(|| RELABEL.captures(text))?;
            Some(M::Rename { label: group(&caps, 1)?, new_label: group(&caps, 2)? })
        }
    }
    .filter(|m| m.check().is_ok())
}
