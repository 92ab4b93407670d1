//! Caption revision: prompt construction, response parsing, validation,
//! a chat-completion client with retries, and a deterministic offline cleaner.

mod client;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::jats::{normalize_whitespace, scan_caption_issues, FigurePair, IssueKind};
use crate::par;
use crate::template;

pub use client::{ChatProvider, HttpChatProvider, ProviderError};

pub const REVISION_TEMPLATE: &str = include_str!("../../templates/caption_revision.txt");
/// Bumped whenever the template text changes; part of the idempotency key.
pub const REVISION_TEMPLATE_VERSION: &str = "caption-revision-v1";

/// Openers the revision prompt asks the model to avoid.
pub const FORBIDDEN_OPENERS: [&str; 3] = ["This image depicts", "The image shows", "Based on the provided"];

/// Lines of the prompt scaffold that must not appear in a revision.
const SCAFFOLD_LINES: [&str; 3] = [
    "Description:",
    "<Your detailed description>",
    "Output your answer in the following format:",
];

pub const ENV_URL: &str = "VOLMO_LLM_URL";
pub const ENV_KEY: &str = "VOLMO_LLM_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaptionError {
    #[error("caption is empty")]
    EmptyCaption,
    #[error("response is empty after removing the answer header")]
    EmptyResponse,
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("revision provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("all {attempts} revision attempts were rejected")]
    AllAttemptsRejected {
        attempts: u32,
        last_violations: Vec<Violation>,
    },
}

/// Fills the revision template with the raw caption (single pass, no rescanning).
pub fn build_revision_prompt(raw_caption: &str) -> Result<String, CaptionError> {
    if raw_caption.trim().is_empty() {
        return Err(CaptionError::EmptyCaption);
    }
    Ok(template::fill(REVISION_TEMPLATE, &[("caption", raw_caption)]))
}

/// Returns the text after the first `Answer:` line, or the whole response when
/// there is none, trimmed.
pub fn parse_revision_response(raw_response: &str) -> Result<String, CaptionError> {
    let mut offset = 0;
    let mut body = raw_response;
    for line in raw_response.split_inclusive('\n') {
        let t = line.trim();
        if t.len() >= 7 && t[..7].eq_ignore_ascii_case("answer:") {
            // Text on the header line itself counts as part of the answer.
            let header_end = offset + line.find(':').expect("colon") + 1;
            body = &raw_response[header_end..];
            break;
        }
        offset += line.len();
    }
    let answer = body.trim();
    if answer.is_empty() {
        Err(CaptionError::EmptyResponse)
    } else {
        Ok(answer.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    ForbiddenOpener,
    Empty,
    ContainsAnswerHeader,
    MultilineHeaderLeak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub accepted: bool,
    pub violations: Vec<Violation>,
}

pub fn validate_revision(revised: &str) -> ValidationVerdict {
    let t = revised.trim();
    let mut violations = Vec::new();
    if t.is_empty() {
        violations.push(Violation::Empty);
    }
    let lower = t.to_lowercase();
    if FORBIDDEN_OPENERS.iter().any(|o| lower.starts_with(&o.to_lowercase())) {
        violations.push(Violation::ForbiddenOpener);
    }
    if lower.contains("answer:") {
        violations.push(Violation::ContainsAnswerHeader);
    }
    if t.lines().any(|l| {
        let l = l.trim();
        SCAFFOLD_LINES
            .iter()
            .any(|s| l.eq_ignore_ascii_case(s) || (s.starts_with('<') && l.contains(s)))
    }) {
        violations.push(Violation::MultilineHeaderLeak);
    }
    ValidationVerdict {
        accepted: violations.is_empty(),
        violations,
    }
}

/// Deletes figure references and citation markers, then normalizes whitespace.
pub fn offline_clean(raw_caption: &str) -> String {
    let mut ranges: Vec<std::ops::Range<usize>> = scan_caption_issues(raw_caption)
        .iter()
        .filter(|i| matches!(i.kind, IssueKind::FigureReference | IssueKind::CitationMarker))
        .filter_map(|i| i.span.byte_range(raw_caption))
        .collect();
    ranges.sort_by_key(|r| r.start);
    let mut kept = String::with_capacity(raw_caption.len());
    let mut pos = 0;
    for r in ranges {
        if r.start > pos {
            kept.push_str(&raw_caption[pos..r.start]);
        }
        pos = pos.max(r.end);
    }
    kept.push_str(&raw_caption[pos.min(raw_caption.len())..]);
    normalize_whitespace(&kept)
}

/// Chat-completion endpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    /// First retry delay; doubles per attempt up to `backoff_cap_secs`.
    #[serde(default = "default_backoff_secs")]
    pub backoff_initial_secs: f64,
    #[serde(default = "default_backoff_cap_secs")]
    pub backoff_cap_secs: f64,
    #[serde(default = "default_true")]
    pub fallback_offline: bool,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Bearer token; never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_max_attempts() -> u32 {
    3
}
fn default_timeout_secs() -> f64 {
    60.0
}
fn default_backoff_secs() -> f64 {
    1.0
}
fn default_backoff_cap_secs() -> f64 {
    30.0
}
fn default_true() -> bool {
    true
}
fn default_in_flight() -> usize {
    4
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: String::new(),
            model_name: "default".into(),
            temperature: 0.0,
            max_attempts: default_max_attempts(),
            timeout_secs: default_timeout_secs(),
            backoff_initial_secs: default_backoff_secs(),
            backoff_cap_secs: default_backoff_cap_secs(),
            fallback_offline: true,
            max_in_flight: default_in_flight(),
            api_key: None,
        }
    }
}

impl ProviderConfig {
    /// Defaults with endpoint and key taken from the environment.
    pub fn from_env() -> Self {
        ProviderConfig {
            endpoint_url: std::env::var(ENV_URL).unwrap_or_default(),
            api_key: std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty()),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), CaptionError> {
        let bad = |m: &str| Err(CaptionError::InvalidConfig(m.to_string()));
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1");
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return bad("timeout must be positive");
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad("temperature must be in [0, 2]");
        }
        if self.backoff_initial_secs.is_nan()
            || self.backoff_cap_secs.is_nan()
            || self.backoff_initial_secs < 0.0
            || self.backoff_cap_secs < 0.0
        {
            return bad("backoff must be non-negative");
        }
        Ok(())
    }

    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let secs = self.backoff_initial_secs * 2f64.powi(retry.min(62) as i32);
        Duration::from_secs_f64(secs.min(self.backoff_cap_secs))
    }
}

/// Stable per-figure request key: sha256 of pmcid, figure id and template version.
pub fn idempotency_key(pmcid: &str, figure_id: &str) -> String {
    let mut h = Sha256::new();
    h.update(pmcid.as_bytes());
    h.update(b"|");
    h.update(figure_id.as_bytes());
    h.update(b"|");
    h.update(REVISION_TEMPLATE_VERSION.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Llm,
    OfflineCleaned,
    /// Neither the provider nor the offline cleaner produced a valid caption.
    Rejected,
}

/// A figure after revision, as written to `figures.revised.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisedFigure {
    #[serde(flatten)]
    pub figure: FigurePair,
    pub provenance: Provenance,
    /// Revised captions are only used as weak supervision.
    pub weak_supervision: bool,
    pub attempts: u32,
    pub template_version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

fn offline_result(figure: &FigurePair, attempts: u32) -> RevisedFigure {
    let cleaned = offline_clean(&figure.raw_caption);
    let verdict = validate_revision(&cleaned);
    let mut out = figure.clone();
    let provenance = if verdict.accepted {
        out.revised_caption = Some(cleaned);
        Provenance::OfflineCleaned
    } else {
        out.revised_caption = None;
        Provenance::Rejected
    };
    RevisedFigure {
        figure: out,
        provenance,
        weak_supervision: true,
        attempts,
        template_version: REVISION_TEMPLATE_VERSION.into(),
        violations: verdict.violations,
    }
}

/// Revises one figure caption.
///
/// With a provider, calls it up to `max_attempts` times until a response
/// passes [`validate_revision`], sleeping with exponential backoff between
/// attempts. On exhaustion the offline cleaner is used when
/// `fallback_offline` is set. Without a provider only the cleaner runs.
pub fn revise_caption(
    figure: &FigurePair,
    provider: Option<&dyn ChatProvider>,
    config: &ProviderConfig,
) -> Result<RevisedFigure, CaptionError> {
    config.validate()?;
    let prompt = build_revision_prompt(&figure.raw_caption)?;
    let Some(provider) = provider else {
        return Ok(offline_result(figure, 0));
    };
    let key = idempotency_key(&figure.article, &figure.figure_id);
    let mut last_violations = Vec::new();
    let mut last_error: Option<ProviderError> = None;
    let mut any_response = false;
    let mut attempts = 0;

    for attempt in 0..config.max_attempts {
        if attempt > 0 {
            std::thread::sleep(config.backoff(attempt - 1));
        }
        attempts += 1;
        match provider.complete(&prompt, &key) {
            Ok(raw) => {
                any_response = true;
                let revised = match parse_revision_response(&raw) {
                    Ok(r) => r,
                    Err(_) => {
                        last_violations = vec![Violation::Empty];
                        continue;
                    }
                };
                let verdict = validate_revision(&revised);
                if verdict.accepted {
                    let mut out = figure.clone();
                    out.revised_caption = Some(revised);
                    return Ok(RevisedFigure {
                        figure: out,
                        provenance: Provenance::Llm,
                        weak_supervision: true,
                        attempts,
                        template_version: REVISION_TEMPLATE_VERSION.into(),
                        violations: Vec::new(),
                    });
                }
                last_violations = verdict.violations;
            }
            Err(e) => {
                let fatal = !e.is_retryable();
                last_error = Some(e);
                if fatal {
                    break;
                }
            }
        }
    }

    if config.fallback_offline {
        return Ok(offline_result(figure, attempts));
    }
    if any_response {
        Err(CaptionError::AllAttemptsRejected {
            attempts,
            last_violations,
        })
    } else {
        Err(CaptionError::ProviderUnreachable(
            last_error.map(|e| e.to_string()).unwrap_or_default(),
        ))
    }
}

/// Revises many figures with at most `config.max_in_flight` requests at once.
/// Output order follows input order.
pub fn revise_corpus(
    figures: &[FigurePair],
    provider: Option<&(dyn ChatProvider + Sync)>,
    config: &ProviderConfig,
) -> Vec<Result<RevisedFigure, CaptionError>> {
    par::map_bounded(config.max_in_flight, figures, |f| {
        revise_caption(f, provider.map(|p| p as &dyn ChatProvider), config)
    })
}
