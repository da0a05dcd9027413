// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pipeline::{Approach, PipelineTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeCategory {
    NotIdentified,
    MeaningNotDerived,
    CorrectBehaviour,
    IncorrectPatternImplementation,
    IncorrectApplicationOrIdentification,
    CriticalInconsistency,
}

impl OutcomeCategory {
    pub const ALL: [OutcomeCategory; 6] = [
        OutcomeCategory::NotIdentified,
        OutcomeCategory::MeaningNotDerived,
        OutcomeCategory::CorrectBehaviour,
        OutcomeCategory::IncorrectPatternImplementation,
        OutcomeCategory::IncorrectApplicationOrIdentification,
        OutcomeCategory::CriticalInconsistency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeCategory::NotIdentified => "not_identified",
            OutcomeCategory::MeaningNotDerived => "meaning_not_derived",
            OutcomeCategory::CorrectBehaviour => "correct_behaviour",
            OutcomeCategory::IncorrectPatternImplementation => "incorrect_pattern_implementation",
            OutcomeCategory::IncorrectApplicationOrIdentification => "incorrect_application_or_identification",
            OutcomeCategory::CriticalInconsistency => "critical_inconsistency",
        }
    }

    pub fn reason(self) -> Reason {
        match self {
            OutcomeCategory::CorrectBehaviour => Reason::NoFailure,
            OutcomeCategory::NotIdentified | OutcomeCategory::MeaningNotDerived => Reason::User,
            OutcomeCategory::IncorrectPatternImplementation => Reason::Llm,
            OutcomeCategory::IncorrectApplicationOrIdentification | OutcomeCategory::CriticalInconsistency => {
                Reason::PatternAmbiguity
            }
        }
    }
}

impl fmt::Display for OutcomeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coarse failure attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    NoFailure,
    User,
    Llm,
    PatternAmbiguity,
}

impl Reason {
    pub const ALL: [Reason; 4] = [Reason::NoFailure, Reason::User, Reason::Llm, Reason::PatternAmbiguity];

    pub fn as_str(self) -> &'static str {
        match self {
            Reason::NoFailure => "no_failure",
            Reason::User => "user",
            Reason::Llm => "llm",
            Reason::PatternAmbiguity => "pattern_ambiguity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("incomplete trace: {0}")]
    IncompleteTrace(&'static str),
    #[error("step combination {0} cannot be produced by a run")]
    UnreachableShape(String),
    #[error("only pipeline traces are classified, not baseline traces")]
    NotAPipelineTrace,
}

fn shape(s1a: bool, s1b: Option<bool>, s2: Option<bool>, s3: Option<bool>) -> String {
    let b = |v: Option<bool>| match v {
        Some(true) => "T",
        Some(false) => "F",
        None => "·",
    };
    format!("({},{},{},{})", b(Some(s1a)), b(s1b), b(s2), b(s3))
}

/// Maps the four step statuses to an outcome.
pub fn classify_flags(
    s1a: bool,
    s1b: Option<bool>,
    s2: Option<bool>,
    s3: Option<bool>,
) -> Result<OutcomeCategory, ClassifyError> {
    let unreachable = || ClassifyError::UnreachableShape(shape(s1a, s1b, s2, s3));
    if !s1a {
        return if s1b.is_none() && s2.is_none() && s3.is_none() {
            Ok(OutcomeCategory::NotIdentified)
        } else {
            Err(unreachable())
        };
    }
    let s2 = s2.ok_or_else(unreachable)?;
    if !s2 {
        return match s3 {
            None => Ok(OutcomeCategory::MeaningNotDerived),
            Some(_) => Err(unreachable()),
        };
    }
    let s1b = s1b.ok_or(ClassifyError::IncompleteTrace("no expected pattern was supplied"))?;
    let s3 = s3.ok_or(ClassifyError::IncompleteTrace("no expected model was supplied"))?;
    Ok(match (s1b, s3) {
        (true, true) => OutcomeCategory::CorrectBehaviour,
        (true, false) => OutcomeCategory::IncorrectPatternImplementation,
        (false, true) => OutcomeCategory::IncorrectApplicationOrIdentification,
        (false, false) => OutcomeCategory::CriticalInconsistency,
    })
}

pub fn classify(trace: &PipelineTrace) -> Result<OutcomeCategory, ClassifyError> {
    if trace.approach != Approach::Cpmr {
        return Err(ClassifyError::NotAPipelineTrace);
    }
    classify_flags(trace.step_1a, trace.step_1b, trace.step_2, trace.step_3)
}
