// SPDX-License-Identifier: Apache-2.0

//! Clarification questions for requests that could not be applied. The text
//! depends only on how the run failed.

use cpmr_core::PatternId;

/// What a request has to say for the pattern to be applicable.
fn missing_details(pattern: PatternId) -> &'static str {
    match pattern {
        PatternId::Cp1 => "which task to add and where to place it",
        PatternId::Cp2 => "which task to delete",
        PatternId::Cp3 => "which task to move and where to move it",
        PatternId::Cp4 => "which task to replace and what should replace it",
        PatternId::Cp5 => "which two tasks to swap",
        PatternId::Cp6 => "which tasks to extract and the name of the new subprocess",
        PatternId::Cp7 => "which subprocess to inline",
        PatternId::Cp8_1 | PatternId::Cp8_2 => "which task to repeat and the loop condition",
        PatternId::Cp9 => "which tasks should run in parallel",
        PatternId::Cp10 => "which task should become conditional and under which condition",
        PatternId::Cp13 => "which condition to change and its new wording",
        PatternId::Cp14 => "which task to copy, the name of the copy and where to place it",
        PatternId::Cp15 => "which task to split and the names of the new tasks",
        PatternId::Cp16 => "which tasks to merge and the name of the merged task",
        PatternId::Cp17 => "which branch to delete",
        PatternId::Cp18 => "which branch to keep",
        PatternId::Cp19 => "which gateway to change and, for an exclusive gateway, the branch conditions",
        PatternId::Lp6 => "which task to rename and its new name",
    }
}

pub fn not_identified() -> String {
    "I could not tell which kind of change you want. Do you want to add, delete, move, replace, \
     swap, repeat, parallelize or rename tasks, or change a gateway or condition? Please rephrase \
     the request naming the change and the tasks involved."
        .to_string()
}

pub fn not_derived(pattern: PatternId) -> String {
    let details = missing_details(pattern);
    format!(
        "I understood the change as '{}' ({}), but the request does not say {details}. Please tell me {details}.",
        pattern.name(),
        pattern
    )
}

pub fn not_applied(reason: &str) -> String {
    format!(
        "The change could not be applied to the current model ({reason}). Please check the task and \
         condition names and try again."
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delete_asks_which_task() {
        assert!(not_derived(PatternId::Cp2).contains("which task to delete"));
    }

    #[test]
    fn every_pattern_has_a_question() {
        for id in PatternId::ALL {
            assert!(missing_details(id).starts_with("which"));
        }
    }
}
