//! Five-paragraph operation orders: parsing, canonical rendering and
//! rule-based mission analysis.
//!
//! Format:
//!
//! ```text
//! 1. Situation
//! a. Enemy Forces: ...
//! 2. Mission
//! The 1st Infantry Battalion seizes Objective XYZ ... in order to ...
//! 3. Execution
//! c. Tasks to Subordinate Units:
//! - 1st Battalion: Secure Objective Area 00.
//! ```
//!
//! Text after a subsection header may continue on following lines; it is
//! joined with single spaces.

pub mod analysis;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use analysis::{
    analyze_mission, AnalysisError, MissionAnalysis, Task, TaskSource, TaskVerb,
    WarfightingFunction,
};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Situation {
    pub enemy_forces: String,
    pub friendly_forces: String,
    pub attachments: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubordinateTask {
    pub unit_name: String,
    pub task_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub commanders_intent: String,
    pub concept_of_operations: String,
    pub tasks_to_subordinates: Vec<SubordinateTask>,
    pub coordination: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sustainment {
    pub logistics: String,
    pub medical: String,
    pub transportation: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandSignal {
    pub command: String,
    pub signal: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpOrder {
    pub situation: Situation,
    pub mission: String,
    pub execution: Execution,
    pub sustainment: Sustainment,
    pub command_signal: CommandSignal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpordError {
    #[error("{0} absent")]
    MissingSection(&'static str),
    #[error("line {line}: unknown header '{text}'")]
    UnknownHeader { line: usize, text: String },
    #[error("line {line}: malformed task line '{text}' (expected '- <Unit>: <task>')")]
    MalformedTask { line: usize, text: String },
    #[error("line {line}: section '{name}' appears twice")]
    DuplicateSection { line: usize, name: &'static str },
    #[error("line {line}: section number {number} does not match '{name}'")]
    SectionNumber {
        line: usize,
        number: u32,
        name: &'static str,
    },
    #[error("line {line}: text outside any section")]
    OrphanText { line: usize },
    #[error("Mission is empty")]
    EmptyMission,
}

const SECTIONS: [&str; 5] = [
    "Situation",
    "Mission",
    "Execution",
    "Sustainment",
    "Command & Signal",
];

const SUBSECTIONS: [&[&str]; 5] = [
    &[
        "Enemy Forces",
        "Friendly Forces",
        "Attachments & Detachments",
    ],
    &[],
    &[
        "Commander's Intent",
        "Concept of Operations",
        "Tasks to Subordinate Units",
        "Coordination & Control",
    ],
    &["Logistics", "Medical Support", "Transportation"],
    &["Command", "Signal"],
];

fn fold(name: &str) -> String {
    name.replace(['\u{2019}', '`'], "'")
        .replace(" and ", " & ")
        .to_lowercase()
}

fn section_index(name: &str) -> Option<usize> {
    let n = fold(name);
    let alias = match n.as_str() {
        "command & control" | "command & signal" => Some(4),
        "service support" => Some(3),
        _ => None,
    };
    alias.or_else(|| SECTIONS.iter().position(|s| fold(s) == n))
}

fn subsection_index(section: usize, name: &str) -> Option<usize> {
    let n = fold(name);
    let alias = match (section, n.as_str()) {
        (0, "enemy") => Some(0),
        (0, "friendly") => Some(1),
        (0, "attachments") => Some(2),
        (2, "intent") => Some(0),
        (2, "tasks to subordinates") => Some(2),
        (2, "coordinating instructions" | "coordination") => Some(3),
        (3, "medical") => Some(1),
        _ => None,
    };
    alias.or_else(|| SUBSECTIONS[section].iter().position(|s| fold(s) == n))
}

fn section_header(line: &str) -> Option<(u32, &str)> {
    let (num, rest) = line.split_once(". ")?;
    if num.len() != 1 {
        return None;
    }
    let d = num.chars().next()?.to_digit(10)?;
    if !(1..=5).contains(&d) || rest.trim().is_empty() || rest.contains(':') {
        return None;
    }
    Some((d, rest.trim()))
}

fn subsection_header(line: &str) -> Option<(&str, &str)> {
    let (letter, rest) = line.split_once(". ")?;
    if letter.len() != 1 || !letter.chars().all(|c| c.is_ascii_lowercase()) {
        return None;
    }
    let (name, text) = rest.split_once(':')?;
    Some((name.trim(), text.trim()))
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn append(buf: &mut String, text: &str) {
    if text.is_empty() {
        return;
    }
    if !buf.is_empty() {
        buf.push(' ');
    }
    buf.push_str(text);
}

fn parse_task(line_no: usize, line: &str) -> Result<SubordinateTask, OpordError> {
    let malformed = || OpordError::MalformedTask {
        line: line_no,
        text: line.to_string(),
    };
    let body = line.strip_prefix('-').ok_or_else(malformed)?;
    let (unit, task) = body.split_once(':').ok_or_else(malformed)?;
    let (unit, task) = (collapse(unit), collapse(task));
    if unit.is_empty() || task.is_empty() {
        return Err(malformed());
    }
    Ok(SubordinateTask {
        unit_name: unit,
        task_text: task,
    })
}

pub fn parse_opord(source: &str) -> Result<OpOrder, OpordError> {
    let mut order = OpOrder::default();
    let mut seen = [false; 5];
    let mut section: Option<usize> = None;
    let mut sub: Option<usize> = None;

    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = collapse(raw);
        if line.is_empty() {
            continue;
        }
        if let Some((number, name)) = section_header(&line) {
            let idx = section_index(name).ok_or_else(|| OpordError::UnknownHeader {
                line: line_no,
                text: line.clone(),
            })?;
            if number as usize != idx + 1 {
                return Err(OpordError::SectionNumber {
                    line: line_no,
                    number,
                    name: SECTIONS[idx],
                });
            }
            if seen[idx] {
                return Err(OpordError::DuplicateSection {
                    line: line_no,
                    name: SECTIONS[idx],
                });
            }
            seen[idx] = true;
            section = Some(idx);
            sub = None;
            continue;
        }
        let Some(sec) = section else {
            return Err(OpordError::OrphanText { line: line_no });
        };
        if sec != 1 {
            if let Some((name, text)) = subsection_header(&line) {
                let s = subsection_index(sec, name).ok_or_else(|| OpordError::UnknownHeader {
                    line: line_no,
                    text: line.clone(),
                })?;
                sub = Some(s);
                if (sec, s) == (2, 2) {
                    if !text.is_empty() {
                        order
                            .execution
                            .tasks_to_subordinates
                            .push(parse_task(line_no, &format!("- {text}"))?);
                    }
                } else {
                    append(field_mut(&mut order, sec, s), text);
                }
                continue;
            }
        }
        match (sec, sub) {
            (1, _) => append(&mut order.mission, &line),
            (2, Some(2)) => order
                .execution
                .tasks_to_subordinates
                .push(parse_task(line_no, &line)?),
            (_, Some(s)) => append(field_mut(&mut order, sec, s), &line),
            (_, None) => {
                return Err(OpordError::UnknownHeader {
                    line: line_no,
                    text: line,
                })
            }
        }
    }

    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(OpordError::MissingSection(SECTIONS[missing]));
    }
    if order.mission.is_empty() {
        return Err(OpordError::EmptyMission);
    }
    Ok(order)
}

fn field_mut(order: &mut OpOrder, section: usize, sub: usize) -> &mut String {
    match (section, sub) {
        (0, 0) => &mut order.situation.enemy_forces,
        (0, 1) => &mut order.situation.friendly_forces,
        (0, _) => &mut order.situation.attachments,
        (2, 0) => &mut order.execution.commanders_intent,
        (2, 1) => &mut order.execution.concept_of_operations,
        (2, _) => &mut order.execution.coordination,
        (3, 0) => &mut order.sustainment.logistics,
        (3, 1) => &mut order.sustainment.medical,
        (3, _) => &mut order.sustainment.transportation,
        (4, 0) => &mut order.command_signal.command,
        _ => &mut order.command_signal.signal,
    }
}

fn push_sub(out: &mut String, letter: char, name: &str, text: &str) {
    out.push(letter);
    out.push_str(". ");
    out.push_str(name);
    out.push(':');
    if !text.is_empty() {
        out.push(' ');
        out.push_str(text);
    }
    out.push('\n');
}

/// Canonical text form of an order.
pub fn render_opord(order: &OpOrder) -> String {
    let mut out = String::new();
    out.push_str("1. Situation\n");
    push_sub(
        &mut out,
        'a',
        SUBSECTIONS[0][0],
        &order.situation.enemy_forces,
    );
    push_sub(
        &mut out,
        'b',
        SUBSECTIONS[0][1],
        &order.situation.friendly_forces,
    );
    push_sub(
        &mut out,
        'c',
        SUBSECTIONS[0][2],
        &order.situation.attachments,
    );
    out.push_str("2. Mission\n");
    out.push_str(&order.mission);
    out.push('\n');
    out.push_str("3. Execution\n");
    push_sub(
        &mut out,
        'a',
        SUBSECTIONS[2][0],
        &order.execution.commanders_intent,
    );
    push_sub(
        &mut out,
        'b',
        SUBSECTIONS[2][1],
        &order.execution.concept_of_operations,
    );
    push_sub(&mut out, 'c', SUBSECTIONS[2][2], "");
    for t in &order.execution.tasks_to_subordinates {
        out.push_str(&format!("- {}: {}\n", t.unit_name, t.task_text));
    }
    push_sub(
        &mut out,
        'd',
        SUBSECTIONS[2][3],
        &order.execution.coordination,
    );
    out.push_str("4. Sustainment\n");
    push_sub(
        &mut out,
        'a',
        SUBSECTIONS[3][0],
        &order.sustainment.logistics,
    );
    push_sub(&mut out, 'b', SUBSECTIONS[3][1], &order.sustainment.medical);
    push_sub(
        &mut out,
        'c',
        SUBSECTIONS[3][2],
        &order.sustainment.transportation,
    );
    out.push_str("5. Command & Signal\n");
    push_sub(
        &mut out,
        'a',
        SUBSECTIONS[4][0],
        &order.command_signal.command,
    );
    push_sub(
        &mut out,
        'b',
        SUBSECTIONS[4][1],
        &order.command_signal.signal,
    );
    out
}

/// Whitespace and layout normalisation: trims and collapses spaces, drops blank
/// lines, folds continuation lines into their subsection or paragraph, canonical
/// section and subsection names and lettering, and emits every subsection.
pub fn normalize_opord(source: &str) -> Result<String, OpordError> {
    parse_opord(source).map(|o| render_opord(&o))
}
