// SPDX-License-Identifier: Apache-2.0

//! Element-based model similarity.
//!
//! Each model becomes a list of element strings (nodes and edges of its graph
//! export, with subprocess bodies included under a `<label>/` prefix). Every
//! element is matched greedily with its most similar counterpart by bigram
//! dice score; matches are weighted by the harmonic mean of both lengths, and
//! the two matching directions are averaged.

use std::fmt;

use crate::dsl::serialize_dsl;
use crate::graph::{export_sequence, GraphDoc};
use crate::model::{Fragment, ProcessModel, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const ONE: SimilarityScore = SimilarityScore(1.0);

    pub fn new(value: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "score out of range: {value}");
        SimilarityScore(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            f.write_str("1.0")
        } else {
            write!(f, "{:.6}", self.0)
        }
    }
}

fn bigrams(text: &str) -> Vec<(char, char)> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<(char, char)> = chars.windows(2).map(|w| (w[0], w[1])).collect();
    out.sort_unstable();
    out
}

/// Multiset intersection size of two sorted bigram lists.
fn shared(a: &[(char, char)], b: &[(char, char)]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn dice_sorted(a: &[(char, char)], b: &[(char, char)]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    2.0 * shared(a, b) as f64 / (a.len() + b.len()) as f64
}

/// Dice coefficient over character-bigram multisets.
///
/// Equal texts score 1 (this covers two empty strings); otherwise a text
/// without bigrams scores 0.
pub fn dice(a: &str, b: &str) -> SimilarityScore {
    if a == b {
        return SimilarityScore::ONE;
    }
    SimilarityScore::new(dice_sorted(&bigrams(a), &bigrams(b)))
}

fn graph_strings(doc: &GraphDoc, prefix: &str, out: &mut Vec<String>) {
    let name = |id: &str| -> String {
        let node = doc.node(id).expect("edge endpoints exist");
        format!("{prefix}{}:{}", node.kind.as_str(), node.label.as_deref().unwrap_or(&node.id))
    };
    for node in &doc.nodes {
        out.push(name(&node.id));
    }
    for edge in &doc.edges {
        let mut s = format!("{} -> {}", name(&edge.source), name(&edge.target));
        if let Some(c) = &edge.condition {
            s.push_str(&format!(" [{c}]"));
        }
        out.push(s);
    }
}

fn subprocesses<'a>(seq: &'a Sequence, out: &mut Vec<(&'a str, &'a Sequence)>) {
    for fragment in seq {
        if let Fragment::Subprocess { label, body } = fragment {
            out.push((label, body));
        } else {
            for child in fragment.child_sequences() {
                subprocesses(child, out);
            }
        }
    }
}

fn sequence_strings(seq: &Sequence, prefix: &str, out: &mut Vec<String>) {
    graph_strings(&export_sequence(seq), prefix, out);
    let mut subs = Vec::new();
    subprocesses(seq, &mut subs);
    for (label, body) in subs {
        sequence_strings(body, &format!("{prefix}{label}/"), out);
    }
}

/// Element strings in a deterministic order: nodes, edges, then subprocess
/// bodies in preorder.
pub fn element_strings(model: &ProcessModel) -> Vec<String> {
    let mut out = Vec::new();
    sequence_strings(&model.body, "", &mut out);
    out
}

struct Element {
    len: f64,
    bigrams: Vec<(char, char)>,
    text: String,
}

fn prepare(strings: Vec<String>) -> Vec<Element> {
    strings
        .into_iter()
        .map(|text| Element { len: text.chars().count() as f64, bigrams: bigrams(&text), text })
        .collect()
}

fn directional(from: &[Element], to: &[Element]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for e in from {
        let mut best = (0.0_f64, None::<&Element>);
        for f in to {
            let score = if e.text == f.text { 1.0 } else { dice_sorted(&e.bigrams, &f.bigrams) };
            if best.1.is_none() || score > best.0 {
                best = (score, Some(f));
                if score == 1.0 {
                    break;
                }
            }
        }
        let Some(f) = best.1 else { continue };
        let weight = 2.0 * e.len * f.len / (e.len + f.len);
        num += weight * best.0;
        den += weight;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn similarity(a: &ProcessModel, b: &ProcessModel) -> SimilarityScore {
    if serialize_dsl(a) == serialize_dsl(b) {
        return SimilarityScore::ONE;
    }
    let ea = prepare(element_strings(a));
    let eb = prepare(element_strings(b));
    SimilarityScore::new((directional(&ea, &eb) + directional(&eb, &ea)) / 2.0)
}

/// Equality at threshold 1.
pub fn models_equal(a: &ProcessModel, b: &ProcessModel) -> bool {
    similarity(a, b).is_one()
}
