// SPDX-License-Identifier: Apache-2.0

//! The `.cpm` text format.
//!
//! ```text
//! process "Order"
//!   task "A"
//!   xor
//!     branch "true"
//!       task "B"
//!     branch "false"
//!       task "C"
//!   task "D"
//! ```
//!
//! One construct per line, children indented exactly two spaces deeper than
//! their parent. Keywords: `task`, `subprocess`, `xor`, `and`, `branch`,
//! `loop-pre`, `loop-post`. Strings are double-quoted; `\"`, `\\` and `\n` are
//! the only escapes. Blank lines are ignored on input and never emitted.

use std::fmt::Write as _;

use crate::model::{validate, Branch, Diagnostic, Fragment, GatewayKind, ProcessModel, Sequence};

pub const FILE_EXTENSION: &str = "cpm";
pub const FORMAT_NAME: &str = "CPM";

const INDENT: &str = "  ";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DslError {
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("model violates invariants: {}", summarize(.0))]
    Invalid(Vec<Diagnostic>),
}

fn summarize(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

impl DslError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            DslError::Invalid(d) => d,
            DslError::Syntax { .. } => &[],
        }
    }
}

/// Canonical text for a model. Equal models give byte-identical output.
pub fn serialize_dsl(model: &ProcessModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "process {}", quote(&model.name));
    write_sequence(&mut out, &model.body, 1);
    out
}

fn write_sequence(out: &mut String, seq: &Sequence, depth: usize) {
    for fragment in seq {
        write_fragment(out, fragment, depth);
    }
}

fn write_fragment(out: &mut String, fragment: &Fragment, depth: usize) {
    let pad = INDENT.repeat(depth);
    match fragment {
        Fragment::Task(label) => {
            let _ = writeln!(out, "{pad}task {}", quote(label));
        }
        Fragment::Subprocess { label, body } => {
            let _ = writeln!(out, "{pad}subprocess {}", quote(label));
            write_sequence(out, body, depth + 1);
        }
        Fragment::LoopPre { condition, body } => {
            let _ = writeln!(out, "{pad}loop-pre {}", quote(condition));
            write_sequence(out, body, depth + 1);
        }
        Fragment::LoopPost { condition, body } => {
            let _ = writeln!(out, "{pad}loop-post {}", quote(condition));
            write_sequence(out, body, depth + 1);
        }
        Fragment::Gateway { kind, branches } => {
            let _ = writeln!(out, "{pad}{}", kind.keyword());
            for branch in branches {
                match &branch.condition {
                    Some(c) => {
                        let _ = writeln!(out, "{pad}{INDENT}branch {}", quote(c));
                    }
                    None => {
                        let _ = writeln!(out, "{pad}{INDENT}branch");
                    }
                }
                write_sequence(out, &branch.body, depth + 2);
            }
        }
    }
}

pub fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Debug)]
struct Line {
    number: usize,
    depth: usize,
    keyword: String,
    argument: Option<String>,
}

/// Parses and validates a model.
pub fn parse_dsl(text: &str) -> Result<ProcessModel, DslError> {
    let lines = tokenize(text)?;
    let mut parser = Parser { lines, pos: 0 };
    let model = parser.parse_model()?;
    let diagnostics = validate(&model);
    if diagnostics.is_empty() {
        Ok(model)
    } else {
        Err(DslError::Invalid(diagnostics))
    }
}

fn syntax(line: usize, message: impl Into<String>) -> DslError {
    DslError::Syntax { line, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Line>, DslError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let content = raw.trim_start_matches(' ');
        let spaces = raw.len() - content.len();
        if content.starts_with('\t') {
            return Err(syntax(number, "tabs are not allowed for indentation"));
        }
        if spaces % INDENT.len() != 0 {
            return Err(syntax(number, format!("indentation of {spaces} spaces is not a multiple of 2")));
        }
        let content = content.trim_end();
        let (keyword, rest) = match content.find(' ') {
            Some(at) => (&content[..at], content[at..].trim_start()),
            None => (content, ""),
        };
        let argument = if rest.is_empty() { None } else { Some(unquote(rest, number)?) };
        lines.push(Line { number, depth: spaces / INDENT.len(), keyword: keyword.to_string(), argument });
    }
    Ok(lines)
}

fn unquote(text: &str, line: usize) -> Result<String, DslError> {
    let mut chars = text.chars();
    if chars.next() != Some('"') {
        return Err(syntax(line, format!("expected a quoted string, found `{text}`")));
    }
    let mut out = String::new();
    loop {
        match chars.next() {
            None => return Err(syntax(line, "unterminated string")),
            Some('"') => break,
            Some('\\') => match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some(other) => return Err(syntax(line, format!("unknown escape `\\{other}`"))),
                None => return Err(syntax(line, "unterminated string")),
            },
            Some(c) => out.push(c),
        }
    }
    let trailing: String = chars.collect();
    if !trailing.trim().is_empty() {
        return Err(syntax(line, format!("unexpected text after string: `{}`", trailing.trim())));
    }
    Ok(out)
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Line> {
        self.lines.get(self.pos)
    }

    fn parse_model(&mut self) -> Result<ProcessModel, DslError> {
        let header = self.lines.first().ok_or_else(|| syntax(1, "empty input, expected `process \"NAME\"`"))?;
        if header.depth != 0 || header.keyword != "process" {
            return Err(syntax(header.number, "expected `process \"NAME\"` header"));
        }
        let name = header
            .argument
            .clone()
            .ok_or_else(|| syntax(header.number, "process header needs a quoted name"))?;
        self.pos = 1;
        let body = self.parse_sequence(1)?;
        if let Some(line) = self.peek() {
            return Err(syntax(line.number, "only one process per file"));
        }
        Ok(ProcessModel::new(name, body))
    }

    fn parse_sequence(&mut self, depth: usize) -> Result<Sequence, DslError> {
        let mut seq = Vec::new();
        while let Some(line) = self.peek() {
            if line.depth < depth {
                break;
            }
            if line.depth > depth {
                return Err(syntax(line.number, "indentation jumps more than one level"));
            }
            seq.push(self.parse_fragment(depth)?);
        }
        Ok(seq)
    }

    fn parse_fragment(&mut self, depth: usize) -> Result<Fragment, DslError> {
        let line = &self.lines[self.pos];
        let number = line.number;
        let keyword = line.keyword.clone();
        let argument = line.argument.clone();
        self.pos += 1;

        let required = |what: &str| {
            argument.clone().ok_or_else(|| syntax(number, format!("`{keyword}` needs a quoted {what}")))
        };
        let fragment = match keyword.as_str() {
            "task" => {
                let label = required("label")?;
                self.expect_no_children(depth, "task")?;
                Fragment::Task(label)
            }
            "subprocess" => Fragment::Subprocess { label: required("label")?, body: self.parse_sequence(depth + 1)? },
            "loop-pre" => Fragment::LoopPre { condition: required("condition")?, body: self.parse_sequence(depth + 1)? },
            "loop-post" => Fragment::LoopPost { condition: required("condition")?, body: self.parse_sequence(depth + 1)? },
            "xor" | "and" => {
                if argument.is_some() {
                    return Err(syntax(number, format!("`{keyword}` takes no argument")));
                }
                let kind = if keyword == "xor" { GatewayKind::Xor } else { GatewayKind::And };
                Fragment::Gateway { kind, branches: self.parse_branches(depth + 1)? }
            }
            "branch" => return Err(syntax(number, "`branch` is only allowed directly under `xor` or `and`")),
            "process" => return Err(syntax(number, "nested `process` header")),
            other => return Err(syntax(number, format!("unknown keyword `{other}`"))),
        };
        Ok(fragment)
    }

    fn parse_branches(&mut self, depth: usize) -> Result<Vec<Branch>, DslError> {
        let mut branches = Vec::new();
        while let Some(line) = self.peek() {
            if line.depth < depth {
                break;
            }
            if line.depth > depth {
                return Err(syntax(line.number, "indentation jumps more than one level"));
            }
            if line.keyword != "branch" {
                return Err(syntax(line.number, format!("expected `branch`, found `{}`", line.keyword)));
            }
            let condition = line.argument.clone();
            self.pos += 1;
            let body = self.parse_sequence(depth + 1)?;
            branches.push(Branch { condition, body });
        }
        Ok(branches)
    }

    fn expect_no_children(&self, depth: usize, what: &str) -> Result<(), DslError> {
        match self.peek() {
            Some(next) if next.depth > depth => Err(syntax(next.number, format!("`{what}` cannot have children"))),
            _ => Ok(()),
        }
    }
}

/// Grammar summary handed to language models as output-format rules.
/// Contains no sample model and no angle brackets.
pub fn grammar_rules() -> &'static str {
    "The model is plain text with one construct per line.\n\
     The first line is: process \"NAME\".\n\
     Every child line is indented by exactly two spaces more than its parent line; indentation never grows by more than one level at a time.\n\
     A task is written as: task \"LABEL\".\n\
     A subprocess is written as: subprocess \"LABEL\", followed by its tasks on the lines below, indented one level deeper.\n\
     An exclusive gateway is written as: xor, followed by two or more lines of the form branch \"CONDITION\" one level deeper; the content of each branch is indented one more level. An exclusive branch may be empty.\n\
     A parallel gateway is written as: and, followed by two or more lines of the form branch (without a condition) one level deeper; every parallel branch must contain at least one element.\n\
     A pre-conditional loop (the condition is checked before each iteration) is written as: loop-pre \"CONDITION\", with its content one level deeper.\n\
     A post-conditional loop (the content runs at least once) is written as: loop-post \"CONDITION\", with its content one level deeper.\n\
     Labels and conditions are enclosed in double quotes; a double quote inside them is written as backslash followed by a double quote, a backslash as two backslashes.\n\
     Start and end events are implicit and must not be written.\n\
     All task and subprocess labels must be unique across the whole model."
}

/// Models travel as canonical DSL text in every JSON payload.
impl serde::Serialize for ProcessModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&serialize_dsl(self))
    }
}

impl<'de> serde::Deserialize<'de> for ProcessModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_dsl(&text).map_err(serde::de::Error::custom)
    }
}
