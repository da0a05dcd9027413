// SPDX-License-Identifier: Apache-2.0

//! Change patterns: identifiers, the catalog handed to language models, the
//! structured parameter form, and the deterministic engine that applies them.

mod engine;
mod meaning;
mod render;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use engine::{apply_pattern, resolve_gateway, PatternError};
pub use meaning::{ConditionRef, GatewayRef, MeaningError, Position, StructuredMeaning};
pub use render::{gateway_phrase, render_meaning_nl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    Cp1,
    Cp2,
    Cp3,
    Cp4,
    Cp5,
    Cp6,
    Cp7,
    Cp8_1,
    Cp8_2,
    Cp9,
    Cp10,
    Cp13,
    Cp14,
    Cp15,
    Cp16,
    Cp17,
    Cp18,
    Cp19,
    Lp6,
}

impl PatternId {
    /// Catalog order.
    pub const ALL: [PatternId; 19] = [
        PatternId::Cp1,
        PatternId::Cp2,
        PatternId::Cp3,
        PatternId::Cp4,
        PatternId::Cp5,
        PatternId::Cp6,
        PatternId::Cp7,
        PatternId::Cp8_1,
        PatternId::Cp8_2,
        PatternId::Cp9,
        PatternId::Cp10,
        PatternId::Cp13,
        PatternId::Cp14,
        PatternId::Cp15,
        PatternId::Cp16,
        PatternId::Cp17,
        PatternId::Cp18,
        PatternId::Cp19,
        PatternId::Lp6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::Cp1 => "cp1",
            PatternId::Cp2 => "cp2",
            PatternId::Cp3 => "cp3",
            PatternId::Cp4 => "cp4",
            PatternId::Cp5 => "cp5",
            PatternId::Cp6 => "cp6",
            PatternId::Cp7 => "cp7",
            PatternId::Cp8_1 => "cp8.1",
            PatternId::Cp8_2 => "cp8.2",
            PatternId::Cp9 => "cp9",
            PatternId::Cp10 => "cp10",
            PatternId::Cp13 => "cp13",
            PatternId::Cp14 => "cp14",
            PatternId::Cp15 => "cp15",
            PatternId::Cp16 => "cp16",
            PatternId::Cp17 => "cp17",
            PatternId::Cp18 => "cp18",
            PatternId::Cp19 => "cp19",
            PatternId::Lp6 => "lp6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternId::Cp1 => "Insert Process Fragment",
            PatternId::Cp2 => "Delete Process Fragment",
            PatternId::Cp3 => "Move Process Fragment",
            PatternId::Cp4 => "Replace Process Fragment",
            PatternId::Cp5 => "Swap Process Fragments",
            PatternId::Cp6 => "Extract Sub Process",
            PatternId::Cp7 => "Inline Sub Process",
            PatternId::Cp8_1 => "Embed Process Fragment in Pre-Cond. Loop",
            PatternId::Cp8_2 => "Embed Process Fragment in Post-Cond. Loop",
            PatternId::Cp9 => "Parallelise Process Fragments",
            PatternId::Cp10 => "Embed Process Fragment in Cond. Branch",
            PatternId::Cp13 => "Update Condition",
            PatternId::Cp14 => "Copy Process Fragment",
            PatternId::Cp15 => "Split Process Fragment",
            PatternId::Cp16 => "Merge Process Fragment",
            PatternId::Cp17 => "Delete Entire Branch",
            PatternId::Cp18 => "Leave Single Branch",
            PatternId::Cp19 => "Replace Gateways",
            PatternId::Lp6 => "Rename Node",
        }
    }

    fn prompt_description(self) -> &'static str {
        match self {
            PatternId::Cp1 => "adds a new task into the model at a given position, e.g. directly before, directly after or between existing tasks",
            PatternId::Cp2 => "removes an existing task or subprocess from the model and reconnects its neighbours",
            PatternId::Cp3 => "takes an existing task or subprocess out of its current position and places it at another position",
            PatternId::Cp4 => "substitutes an existing task or subprocess with one or more new tasks",
            PatternId::Cp5 => "exchanges the positions of two existing tasks or subprocesses",
            PatternId::Cp6 => "groups a contiguous range of existing elements into a new subprocess that takes their place",
            PatternId::Cp7 => "dissolves an existing subprocess so that its content appears directly in the enclosing process",
            PatternId::Cp8_1 => "wraps an existing element in a loop whose condition is checked before each iteration, so the element may run zero or more times",
            PatternId::Cp8_2 => "wraps an existing element in a loop whose condition is checked after each iteration, so the element runs at least once",
            PatternId::Cp9 => "makes several existing elements that currently run one after another execute in parallel branches",
            PatternId::Cp10 => "makes an existing element optional by placing it in a conditional branch that is skipped when the condition does not hold",
            PatternId::Cp13 => "changes the condition text of an existing exclusive branch or loop",
            PatternId::Cp14 => "duplicates an existing element under a new label and places the copy at a given position",
            PatternId::Cp15 => "divides one existing task into several new tasks executed one after another",
            PatternId::Cp16 => "combines several existing separate elements into one new task",
            PatternId::Cp17 => "deletes one whole branch of a gateway with everything inside it; a gateway left with a single branch is removed",
            PatternId::Cp18 => "keeps exactly one branch of a gateway, deletes all other branches and removes the gateway",
            PatternId::Cp19 => "changes the type of a gateway block, e.g. from parallel to exclusive or vice versa, for its split and join together",
            PatternId::Lp6 => "changes the label of an existing task or subprocess without changing anything else",
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternIdError {
    #[error("pattern '{0}' is not supported: control dependencies have no block-structured counterpart")]
    Unsupported(String),
    #[error("unknown pattern id '{0}'")]
    Unknown(String),
}

impl FromStr for PatternId {
    type Err = PatternIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase();
        if let Some(id) = PatternId::ALL.iter().find(|id| id.as_str() == normalized) {
            return Ok(*id);
        }
        match normalized.as_str() {
            "cp11" | "cp12" => Err(PatternIdError::Unsupported(normalized)),
            _ => Err(PatternIdError::Unknown(s.to_string())),
        }
    }
}

impl Serialize for PatternId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PatternId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub id: PatternId,
    pub name: &'static str,
    pub prompt_description: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternCatalog {
    entries: Vec<CatalogEntry>,
}

impl PatternCatalog {
    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn get(&self, id: PatternId) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn contains(&self, id: PatternId) -> bool {
        self.get(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Restricts the catalog, e.g. for experiments with fewer patterns.
    pub fn restricted_to(&self, ids: &[PatternId]) -> PatternCatalog {
        PatternCatalog { entries: self.entries.iter().filter(|e| ids.contains(&e.id)).cloned().collect() }
    }

    /// One line per pattern: `cp1 (Insert Process Fragment): adds ...`.
    pub fn prompt_listing(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{} ({}): {}", e.id, e.name, e.prompt_description))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn catalog() -> PatternCatalog {
    PatternCatalog {
        entries: PatternId::ALL
            .iter()
            .map(|&id| CatalogEntry { id, name: id.name(), prompt_description: id.prompt_description() })
            .collect(),
    }
}
