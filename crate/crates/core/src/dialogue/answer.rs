//! Tolerant parsing of structured model answers.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{split_known_keys, starts_with_key, DialogueTask};

/// (display key, field name) pairs expected for each task; the first is the lead key.
fn task_keys(task: DialogueTask) -> &'static [(&'static str, &'static str)] {
    match task {
        DialogueTask::Differential => &[("Diagnosis", "diagnosis"), ("Severity", "severity")],
        DialogueTask::MostLikely => &[
            ("Diagnosis", "diagnosis"),
            ("Severity", "severity"),
            ("Justification", "justification"),
        ],
        DialogueTask::AssessmentPlan => &[("Assessment", "assessment"), ("Plan", "plan")],
        DialogueTask::Treatments => &[
            ("Treatment", "treatment"),
            ("Immediate outcome", "immediate_outcome"),
            ("Long-term outcome", "long_term_outcome"),
            ("Justification", "justification"),
        ],
        DialogueTask::FollowUp => &[
            ("Follow-up care", "care"),
            ("Justification", "justification"),
            ("Prognosis", "prognosis"),
            ("Unexpected outcomes", "unexpected_outcomes"),
        ],
    }
}

/// Every key used by any task. Keys outside the current task's set are kept
/// as extras; text that is not one of these keys is never split.
const ALL_KEYS: [&str; 11] = [
    // Longer keys first so "Immediate outcome" wins over shorter prefixes.
    "Unexpected outcomes",
    "Immediate outcome",
    "Long-term outcome",
    "Follow-up care",
    "Justification",
    "Assessment",
    "Diagnosis",
    "Prognosis",
    "Treatment",
    "Severity",
    "Plan",
];

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnswerEntry {
    /// Number printed before the entry, if any.
    pub index: Option<u32>,
    /// Task fields keyed by field name (e.g. `diagnosis`, `severity`).
    pub fields: BTreeMap<String, String>,
    /// Recognised keys that do not belong to this task, keyed by display key.
    pub extras: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ParseReport {
    /// Entry lines seen (numbered lines, plus an unnumbered lead-key line).
    pub numbered_lines: usize,
    pub well_formed: usize,
    pub malformed: usize,
    /// Malformed entry lines, verbatim.
    pub malformed_lines: Vec<String>,
    /// Well-formed entries whose content repeats an earlier entry.
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructuredAnswer {
    pub task: Option<DialogueTask>,
    pub entries: Vec<AnswerEntry>,
    pub report: ParseReport,
}

fn split_number(line: &str) -> Option<(u32, &str)> {
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let n = line[..digits].parse().ok()?;
    let rest = line[digits..]
        .strip_prefix('.')
        .or_else(|| line[digits..].strip_prefix(')'))?;
    Some((n, rest.trim_start()))
}

/// Parses a model answer for `task` into entries. Never fails: anything that
/// cannot be read is counted as malformed and kept verbatim.
pub fn parse_structured_answer(task: DialogueTask, raw: &str) -> StructuredAnswer {
    let keys = task_keys(task);
    let lead = keys[0].0;
    let mut answer = StructuredAnswer {
        task: Some(task),
        ..Default::default()
    };
    let mut seen = HashSet::new();

    for line in raw.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (index, body) = match split_number(line) {
            Some((n, body)) => (Some(n), body),
            None if starts_with_key(line, lead) => (None, line),
            None => continue,
        };
        answer.report.numbered_lines += 1;
        let pairs = split_known_keys(body, &[lead], &ALL_KEYS).filter(|pairs| !pairs[0].1.is_empty());
        let Some(pairs) = pairs else {
            answer.report.malformed += 1;
            answer.report.malformed_lines.push(line.to_string());
            continue;
        };
        answer.report.well_formed += 1;
        let mut entry = AnswerEntry {
            index,
            ..Default::default()
        };
        for (key, value) in pairs {
            match keys.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)) {
                Some((_, field)) => {
                    entry.fields.entry(field.to_string()).or_insert(value);
                }
                None => {
                    entry.extras.entry(key.to_string()).or_insert(value);
                }
            }
        }
        if !seen.insert((entry.fields.clone(), entry.extras.clone())) {
            answer.report.duplicates += 1;
        }
        answer.entries.push(entry);
    }
    answer
}
