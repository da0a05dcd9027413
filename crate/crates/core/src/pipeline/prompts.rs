// SPDX-License-Identifier: Apache-2.0

//! The three zero-shot prompt templates and their instantiation.

use crate::dsl::{grammar_rules, FORMAT_NAME};
use crate::patterns::{CatalogEntry, PatternCatalog};

pub const PATTERN_LIST: &str = "<List of Existing Change Patterns>";
pub const WORDING: &str = "<Wording provided by a user>";
pub const PATTERN_ID: &str = "<Pattern ID>";
pub const PATTERN_DESCRIPTION: &str = "<Pattern Description>";
pub const OUTPUT_FORMAT: &str = "<Output Format>";
pub const OUTPUT_RULES: &str = "<Rules for the Process Model in Output Format>";
pub const INPUT_MODEL: &str = "<Input Process Model>";
pub const MEANING: &str = "<Meaning>";

pub const ALL_PLACEHOLDERS: [&str; 8] =
    [PATTERN_LIST, WORDING, PATTERN_ID, PATTERN_DESCRIPTION, OUTPUT_FORMAT, OUTPUT_RULES, INPUT_MODEL, MEANING];

pub const IDENTIFY_SYSTEM: &str = "You are an expert in BPMN (Business Process Model and Notation) modeling. Your task is to evaluate and interpret user-provided modifications to a BPMN process model.

Your task is to classify the user input into one of the predefined change patterns for process model redesign, if a matching pattern exists.
Use the following classification of change patterns to interpret user modifications: 
<List of Existing Change Patterns>.

If a match is found, return only the pattern ID. Only one pattern can be matched.
If no match is found, return NA. No other information is allowed to be returned!!!";

pub const IDENTIFY_USER: &str = "<Wording provided by a user>.";

pub const DERIVE_SYSTEM: &str = "You are an expert in BPMN (Business Process Model and Notation) modeling. Your task is to evaluate and interpret modifications to a BPMN process model. The user will provide an input modification based on a predefined change pattern.
Your responsibilities are:
(a) Validate whether the user-provided input modification contains enough unambiguous information to apply the predefined change pattern.
(b) Interpret the meaning of the modification based on BPMN semantics and the predefined change pattern.
(c) Ensure the modification complies with BPMN modeling rules and fits within the structure of the existing process.
Return only the clear meaning of the modification in natural language, without any ambiguity or additional information. If the input does not contain sufficient details to apply the change pattern, return \"NA\".";

pub const DERIVE_USER: &str = "Identified changed pattern is <Pattern ID> - <Pattern Description>. Changes applied to the model: <Wording provided by a user>.";

pub const APPLY_SYSTEM: &str = "You are an expert in BPMN modelling, specifically in <Output Format> format.
Your task is to validate and transform BPMN models based on user-provided modifications, ensuring compliance with BPMN rules and <Output Format> syntax.
You are allowed to adjust only those parts of the process model mentioned in the user-provided modification. Other parts of the model have to stay unchanged.

The <Output Format> syntax for BPMN models is described as follows:
<Rules for the Process Model in Output Format>.

Return only <Output Format> as text without any additional information! Give me just the raw <Output Format> code without markdown formatting.";

pub const APPLY_USER: &str = "Consider following process model: <Input Process Model>.
Apply these changes to the model: <Meaning>.";

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

/// Sentence-final text is followed by a literal `.` in the templates.
fn strip_final_period(text: &str) -> &str {
    text.trim().trim_end_matches('.')
}

pub fn identify_prompt(catalog: &PatternCatalog, wording: &str) -> Prompt {
    Prompt {
        system: IDENTIFY_SYSTEM.replace(PATTERN_LIST, &catalog.prompt_listing()),
        user: IDENTIFY_USER.replace(WORDING, strip_final_period(wording)),
    }
}

pub fn derive_prompt(entry: &CatalogEntry, wording: &str) -> Prompt {
    Prompt {
        system: DERIVE_SYSTEM.to_string(),
        user: DERIVE_USER
            .replace(PATTERN_ID, entry.id.as_str())
            .replace(PATTERN_DESCRIPTION, &format!("{}: {}", entry.name, entry.prompt_description))
            .replace(WORDING, strip_final_period(wording)),
    }
}

/// `model` is canonical DSL text; `change` is the meaning (or, for the
/// baseline, the raw wording).
pub fn apply_prompt(model: &str, change: &str) -> Prompt {
    Prompt {
        system: APPLY_SYSTEM.replace(OUTPUT_RULES, grammar_rules()).replace(OUTPUT_FORMAT, FORMAT_NAME),
        user: APPLY_USER
            .replace(INPUT_MODEL, &format!("\n{}\n", model.trim_end()))
            .replace(MEANING, strip_final_period(change)),
    }
}

/// Any template placeholder left in an outgoing prompt.
pub fn leftover_placeholders(prompt: &Prompt) -> Vec<&'static str> {
    ALL_PLACEHOLDERS
        .iter()
        .copied()
        .filter(|p| prompt.system.contains(p) || prompt.user.contains(p))
        .collect()
}
