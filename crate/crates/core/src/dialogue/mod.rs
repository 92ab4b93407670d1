//! Clinical profiles, profile rendering and five-turn dialogue synthesis.
//!
//! Profiles render into a bracketed-section text block; [`parse_profile_text`]
//! is its inverse for the non-gold fields. [`build_dialogue`] wraps a profile
//! into the fixed five-task script and [`parse_structured_answer`] reads model
//! answers back into key/value entries.

mod answer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::template;

pub use answer::{parse_structured_answer, AnswerEntry, ParseReport, StructuredAnswer};

pub const DIFFERENTIAL_TEMPLATE: &str = include_str!("../../templates/dialogue/01_differential.txt");
pub const MOST_LIKELY_TEMPLATE: &str = include_str!("../../templates/dialogue/02_most_likely.txt");
pub const ASSESSMENT_PLAN_TEMPLATE: &str = include_str!("../../templates/dialogue/03_assessment_plan.txt");
pub const TREATMENTS_TEMPLATE: &str = include_str!("../../templates/dialogue/04_treatments.txt");
pub const FOLLOW_UP_TEMPLATE: &str = include_str!("../../templates/dialogue/05_follow_up.txt");

const PROFILE_HEADER: &str = "[PATIENT CLINICAL PROFILE]";
const MEDICAL_HISTORY: &str = "[MEDICAL HISTORY]";
const FAMILY_HISTORY: &str = "[FAMILY HISTORY]";
const SYMPTOMS: &str = "[SYMPTOMS]";
const EXAMINATION_FINDINGS: &str = "[EXAMINATION FINDINGS]";
const DIAGNOSTIC_IMAGING: &str = "[DIAGNOSTIC IMAGING]";
const NO_FAMILY_HISTORY: &str = "No family history reported";

/// Bracketed section headers in render order.
pub const SECTION_HEADERS: [&str; 6] = [
    PROFILE_HEADER,
    MEDICAL_HISTORY,
    FAMILY_HISTORY,
    SYMPTOMS,
    EXAMINATION_FINDINGS,
    DIAGNOSTIC_IMAGING,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DialogueError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile text line {line}: {reason}")]
    MalformedProfileText { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Symptom {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progression: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExaminationFinding {
    pub exam_type: String,
    pub finding: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ImagingFinding {
    pub imaging_type: String,
    pub finding: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_results: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DiagnosisEntry {
    pub diagnosis: String,
    pub severity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PrimaryDiagnosis {
    pub diagnosis: String,
    pub severity: String,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssessmentPlanEntry {
    pub assessment: String,
    pub plan: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TreatmentEntry {
    pub treatment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub immediate_outcome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub long_term_outcome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FollowUpEntry {
    pub care: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prognosis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unexpected_outcomes: Option<String>,
}

/// Structured clinical case. The first seven list fields are the rendered
/// profile; the remaining ones are gold answers for the dialogue turns.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClinicalProfile {
    pub case_id: String,
    #[serde(default)]
    pub medical_history: Vec<String>,
    #[serde(default)]
    pub ocular_history: Vec<String>,
    #[serde(default)]
    pub family_history: Vec<String>,
    #[serde(default)]
    pub symptoms: Vec<Symptom>,
    #[serde(default)]
    pub examination_findings: Vec<ExaminationFinding>,
    #[serde(default)]
    pub diagnostic_imaging: Vec<ImagingFinding>,
    #[serde(default)]
    pub differential_diagnoses: Vec<DiagnosisEntry>,
    #[serde(default)]
    pub primary_diagnosis: Option<PrimaryDiagnosis>,
    #[serde(default)]
    pub assessment_plan: Vec<AssessmentPlanEntry>,
    #[serde(default)]
    pub treatments: Vec<TreatmentEntry>,
    #[serde(default)]
    pub follow_up: Vec<FollowUpEntry>,
    #[serde(default)]
    pub image_refs: Vec<String>,
}

impl ClinicalProfile {
    pub fn validate(&self) -> Result<(), DialogueError> {
        fn need(ok: bool, what: &str) -> Result<(), DialogueError> {
            if ok {
                Ok(())
            } else {
                Err(DialogueError::InvalidProfile(what.to_string()))
            }
        }
        let filled = |s: &str| !s.trim().is_empty();
        need(filled(&self.case_id), "case_id is empty")?;
        need(
            self.medical_history.iter().all(|s| filled(s)),
            "empty medical history entry",
        )?;
        need(
            self.ocular_history.iter().all(|s| filled(s)),
            "empty ocular history entry",
        )?;
        need(
            self.family_history.iter().all(|s| filled(s)),
            "empty family history entry",
        )?;
        need(
            self.symptoms.iter().all(|s| filled(&s.description)),
            "symptom without description",
        )?;
        need(
            self.examination_findings
                .iter()
                .all(|e| filled(&e.exam_type) && filled(&e.finding)),
            "examination entry without type or finding",
        )?;
        need(
            self.diagnostic_imaging
                .iter()
                .all(|e| filled(&e.imaging_type) && filled(&e.finding)),
            "imaging entry without type or finding",
        )?;
        need(
            self.differential_diagnoses.iter().all(|d| filled(&d.diagnosis)),
            "differential without diagnosis",
        )?;
        need(
            self.primary_diagnosis.as_ref().is_none_or(|d| filled(&d.diagnosis)),
            "primary diagnosis without diagnosis",
        )?;
        need(
            self.assessment_plan.iter().all(|a| filled(&a.assessment)),
            "assessment entry without assessment",
        )?;
        need(
            self.treatments.iter().all(|t| filled(&t.treatment)),
            "treatment entry without treatment",
        )?;
        need(
            self.follow_up.iter().all(|f| filled(&f.care)),
            "follow-up entry without care",
        )?;
        need(self.image_refs.iter().all(|s| filled(s)), "empty image reference")?;
        Ok(())
    }

    /// Copy with all gold fields cleared; this is what survives a render/parse round trip.
    pub fn without_gold(&self) -> ClinicalProfile {
        ClinicalProfile {
            differential_diagnoses: Vec::new(),
            primary_diagnosis: None,
            assessment_plan: Vec::new(),
            treatments: Vec::new(),
            follow_up: Vec::new(),
            ..self.clone()
        }
    }
}

fn push_opt(line: &mut String, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        line.push_str("; ");
        line.push_str(key);
        line.push_str(": ");
        line.push_str(v);
    }
}

fn numbered(lines: &[String]) -> String {
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{}. {}", i + 1, l))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Renders the bracketed profile block.
///
/// Sections without data are omitted, except family history, which renders a
/// fixed placeholder when empty.
pub fn render_profile(profile: &ClinicalProfile) -> String {
    let mut sections = vec![PROFILE_HEADER.to_string()];

    let history: Vec<String> = profile
        .medical_history
        .iter()
        .map(|h| format!("Medical History: {h}"))
        .chain(profile.ocular_history.iter().map(|h| format!("Ocular History: {h}")))
        .collect();
    if !history.is_empty() {
        sections.push(format!("{MEDICAL_HISTORY}\n{}", numbered(&history)));
    }

    if profile.family_history.is_empty() {
        sections.push(format!("{FAMILY_HISTORY}\n{NO_FAMILY_HISTORY}"));
    } else {
        let lines: Vec<String> = profile
            .family_history
            .iter()
            .map(|h| format!("Family History: {h}"))
            .collect();
        sections.push(format!("{FAMILY_HISTORY}\n{}", numbered(&lines)));
    }

    if !profile.symptoms.is_empty() {
        let lines: Vec<String> = profile
            .symptoms
            .iter()
            .map(|s| {
                let mut line = format!("Symptom: {}", s.description);
                push_opt(&mut line, "Duration", &s.duration);
                push_opt(&mut line, "Progression", &s.progression);
                line
            })
            .collect();
        sections.push(format!("{SYMPTOMS}\n{}", numbered(&lines)));
    }

    if !profile.examination_findings.is_empty() {
        let lines: Vec<String> = profile
            .examination_findings
            .iter()
            .map(|e| {
                let mut line = format!("Examination Type: {}; Finding: {}", e.exam_type, e.finding);
                push_opt(&mut line, "Note", &e.note);
                line
            })
            .collect();
        sections.push(format!("{EXAMINATION_FINDINGS}\n{}", numbered(&lines)));
    }

    let imaging: Vec<String> = profile
        .diagnostic_imaging
        .iter()
        .map(|e| {
            let mut line = format!("Imaging Type: {}; Finding: {}", e.imaging_type, e.finding);
            push_opt(&mut line, "Key Results", &e.key_results);
            line
        })
        .chain(profile.image_refs.iter().map(|r| format!("Image Reference: {r}")))
        .collect();
    if !imaging.is_empty() {
        sections.push(format!("{DIAGNOSTIC_IMAGING}\n{}", numbered(&imaging)));
    }

    sections.join("\n\n")
}

/// True when `s` starts with `key` (ASCII case-insensitive) followed by a colon.
pub(crate) fn starts_with_key(s: &str, key: &str) -> bool {
    s.get(..key.len()).is_some_and(|h| h.eq_ignore_ascii_case(key)) && s[key.len()..].starts_with(':')
}

/// Splits `body` into `(key, value)` pairs. The body must start with one of
/// `leads`; later pairs are split only before `"; Key: "` for a key in `follows`,
/// so semicolons inside free text survive.
pub(crate) fn split_known_keys<'a>(
    body: &str,
    leads: &[&'a str],
    follows: &[&'a str],
) -> Option<Vec<(&'a str, String)>> {
    let lead = leads.iter().find(|k| starts_with_key(body, k))?;
    let mut pairs = Vec::new();
    let mut key = *lead;
    let mut rest = &body[lead.len() + 1..];
    loop {
        let mut cut: Option<(usize, &'a str)> = None;
        let mut search = 0;
        while let Some(off) = rest[search..].find("; ") {
            let at = search + off;
            let after = &rest[at + 2..];
            if let Some(k) = follows.iter().find(|k| starts_with_key(after, k)) {
                cut = Some((at, k));
                break;
            }
            search = at + 2;
        }
        match cut {
            Some((at, next)) => {
                pairs.push((key, rest[..at].trim().to_string()));
                rest = &rest[at + 2 + next.len() + 1..];
                key = next;
            }
            None => {
                pairs.push((key, rest.trim().to_string()));
                return Some(pairs);
            }
        }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> DialogueError {
    DialogueError::MalformedProfileText {
        line,
        reason: reason.into(),
    }
}

fn entry_body(line: &str) -> Option<&str> {
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    line[digits..].strip_prefix(". ")
}

/// Parses a rendered profile block back into a profile (gold fields empty).
pub fn parse_profile_text(case_id: &str, text: &str) -> Result<ClinicalProfile, DialogueError> {
    let mut profile = ClinicalProfile {
        case_id: case_id.to_string(),
        ..Default::default()
    };
    let mut section: Option<&str> = None;
    let mut seen_header = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = SECTION_HEADERS.iter().find(|h| **h == line) {
            if *h == PROFILE_HEADER {
                seen_header = true;
            } else {
                section = Some(h);
            }
            continue;
        }
        let sec = section.ok_or_else(|| malformed(lineno, "content before first section header"))?;
        if sec == FAMILY_HISTORY && line == NO_FAMILY_HISTORY {
            continue;
        }
        let body = entry_body(line).ok_or_else(|| malformed(lineno, "expected a numbered entry"))?;
        let get = |pairs: &[(&str, String)], k: &str| pairs.iter().find(|(key, _)| *key == k).map(|(_, v)| v.clone());
        match sec {
            MEDICAL_HISTORY => {
                let pairs = split_known_keys(body, &["Medical History", "Ocular History"], &[])
                    .ok_or_else(|| malformed(lineno, "expected Medical History or Ocular History"))?;
                let (key, value) = pairs.into_iter().next().expect("one pair");
                if key == "Medical History" {
                    profile.medical_history.push(value);
                } else {
                    profile.ocular_history.push(value);
                }
            }
            FAMILY_HISTORY => {
                let pairs = split_known_keys(body, &["Family History"], &[])
                    .ok_or_else(|| malformed(lineno, "expected Family History"))?;
                profile.family_history.push(pairs[0].1.clone());
            }
            SYMPTOMS => {
                let pairs = split_known_keys(body, &["Symptom"], &["Duration", "Progression"])
                    .ok_or_else(|| malformed(lineno, "expected Symptom"))?;
                profile.symptoms.push(Symptom {
                    description: pairs[0].1.clone(),
                    duration: get(&pairs, "Duration"),
                    progression: get(&pairs, "Progression"),
                });
            }
            EXAMINATION_FINDINGS => {
                let pairs = split_known_keys(body, &["Examination Type"], &["Finding", "Note"])
                    .ok_or_else(|| malformed(lineno, "expected Examination Type"))?;
                profile.examination_findings.push(ExaminationFinding {
                    exam_type: pairs[0].1.clone(),
                    finding: get(&pairs, "Finding").ok_or_else(|| malformed(lineno, "missing Finding"))?,
                    note: get(&pairs, "Note"),
                });
            }
            DIAGNOSTIC_IMAGING => {
                let pairs = split_known_keys(body, &["Imaging Type", "Image Reference"], &["Finding", "Key Results"])
                    .ok_or_else(|| malformed(lineno, "expected Imaging Type or Image Reference"))?;
                if pairs[0].0 == "Image Reference" {
                    profile.image_refs.push(pairs[0].1.clone());
                } else {
                    profile.diagnostic_imaging.push(ImagingFinding {
                        imaging_type: pairs[0].1.clone(),
                        finding: get(&pairs, "Finding").ok_or_else(|| malformed(lineno, "missing Finding"))?,
                        key_results: get(&pairs, "Key Results"),
                    });
                }
            }
            _ => unreachable!(),
        }
    }
    if !seen_header {
        return Err(malformed(1, format!("missing {PROFILE_HEADER}")));
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueTask {
    Differential,
    MostLikely,
    AssessmentPlan,
    Treatments,
    FollowUp,
}

impl DialogueTask {
    pub const ORDER: [DialogueTask; 5] = [
        DialogueTask::Differential,
        DialogueTask::MostLikely,
        DialogueTask::AssessmentPlan,
        DialogueTask::Treatments,
        DialogueTask::FollowUp,
    ];

    pub fn template(&self) -> &'static str {
        match self {
            DialogueTask::Differential => DIFFERENTIAL_TEMPLATE,
            DialogueTask::MostLikely => MOST_LIKELY_TEMPLATE,
            DialogueTask::AssessmentPlan => ASSESSMENT_PLAN_TEMPLATE,
            DialogueTask::Treatments => TREATMENTS_TEMPLATE,
            DialogueTask::FollowUp => FOLLOW_UP_TEMPLATE,
        }
    }

    /// The block under "### Expected Output Format ###", without the closing rule.
    pub fn expected_output_format(&self) -> &'static str {
        let t = self.template();
        let marker = "### Expected Output Format ###\n";
        let start = t.find(marker).expect("template has output format") + marker.len();
        let end = t.rfind("\n#").expect("template has closing rule");
        &t[start..end]
    }
}

/// Gold answer for one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", content = "entries", rename_all = "snake_case")]
pub enum TurnGold {
    Differential(Vec<DiagnosisEntry>),
    MostLikely(PrimaryDiagnosis),
    AssessmentPlan(Vec<AssessmentPlanEntry>),
    Treatments(Vec<TreatmentEntry>),
    FollowUp(Vec<FollowUpEntry>),
}

impl TurnGold {
    /// Serializes the gold in the task's expected output format.
    pub fn render(&self) -> String {
        match self {
            TurnGold::Differential(entries) => {
                let lines: Vec<String> = entries
                    .iter()
                    .map(|d| format!("Diagnosis: {}; Severity: {}", d.diagnosis, d.severity))
                    .collect();
                format!("[DIFFERENTIAL DIAGNOSIS]\n{}", numbered(&lines))
            }
            TurnGold::MostLikely(d) => {
                format!(
                    "Diagnosis: {}; Severity: {}; Justification: {}",
                    d.diagnosis, d.severity, d.justification
                )
            }
            TurnGold::AssessmentPlan(entries) => {
                let lines: Vec<String> = entries
                    .iter()
                    .map(|a| format!("Assessment: {}; Plan: {}", a.assessment, a.plan))
                    .collect();
                numbered(&lines)
            }
            TurnGold::Treatments(entries) => {
                let lines: Vec<String> = entries
                    .iter()
                    .map(|t| {
                        let mut line = format!("Treatment: {}", t.treatment);
                        push_opt(&mut line, "Immediate outcome", &t.immediate_outcome);
                        push_opt(&mut line, "Long-term outcome", &t.long_term_outcome);
                        push_opt(&mut line, "Justification", &t.justification);
                        line
                    })
                    .collect();
                numbered(&lines)
            }
            TurnGold::FollowUp(entries) => {
                let lines: Vec<String> = entries
                    .iter()
                    .map(|f| {
                        let mut line = format!("Follow-up care: {}", f.care);
                        push_opt(&mut line, "Justification", &f.justification);
                        push_opt(&mut line, "Prognosis", &f.prognosis);
                        push_opt(&mut line, "Unexpected outcomes", &f.unexpected_outcomes);
                        line
                    })
                    .collect();
                numbered(&lines)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub task: DialogueTask,
    pub prompt: String,
    pub expected_output_format: String,
    pub gold: Option<TurnGold>,
    /// Gold rendered in the expected output format.
    pub gold_text: Option<String>,
    /// Set when the profile has no gold for this task.
    pub prompt_only: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueScript {
    pub case_id: String,
    pub turns: Vec<Turn>,
}

impl DialogueScript {
    /// All turn prompts joined by blank lines.
    pub fn prompt_transcript(&self) -> String {
        self.turns
            .iter()
            .map(|t| t.prompt.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Builds the five-turn script for a profile.
pub fn build_dialogue(profile: &ClinicalProfile) -> Result<DialogueScript, DialogueError> {
    profile.validate()?;
    let rendered = render_profile(profile);
    let turns = DialogueTask::ORDER
        .iter()
        .map(|&task| {
            let prompt = match task {
                DialogueTask::Differential => template::fill(task.template(), &[("profile", &rendered)]),
                _ => task.template().to_string(),
            };
            let gold = match task {
                DialogueTask::Differential if !profile.differential_diagnoses.is_empty() => {
                    Some(TurnGold::Differential(profile.differential_diagnoses.clone()))
                }
                DialogueTask::MostLikely => profile.primary_diagnosis.clone().map(TurnGold::MostLikely),
                DialogueTask::AssessmentPlan if !profile.assessment_plan.is_empty() => {
                    Some(TurnGold::AssessmentPlan(profile.assessment_plan.clone()))
                }
                DialogueTask::Treatments if !profile.treatments.is_empty() => {
                    Some(TurnGold::Treatments(profile.treatments.clone()))
                }
                DialogueTask::FollowUp if !profile.follow_up.is_empty() => {
                    Some(TurnGold::FollowUp(profile.follow_up.clone()))
                }
                _ => None,
            };
            Turn {
                task,
                prompt,
                expected_output_format: task.expected_output_format().to_string(),
                gold_text: gold.as_ref().map(TurnGold::render),
                prompt_only: gold.is_none(),
                gold,
            }
        })
        .collect();
    Ok(DialogueScript {
        case_id: profile.case_id.clone(),
        turns,
    })
}
