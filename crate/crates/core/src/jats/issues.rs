//! Caption artifact detection.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    FigureReference,
    CitationMarker,
    CrossReference,
    Fragment,
    ImagingShorthand,
}

/// Half-open span in Unicode scalar (char) offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    /// Converts to a byte range of `text`. Returns `None` when out of bounds.
    pub fn byte_range(&self, text: &str) -> Option<std::ops::Range<usize>> {
        if self.start > self.end {
            return None;
        }
        let mut it = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
        let start = it.nth(self.start)?;
        let end = if self.end == self.start {
            start
        } else {
            it.nth(self.end - self.start - 1)?
        };
        Some(start..end)
    }

    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        self.byte_range(text).map(|r| &text[r])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionIssue {
    pub kind: IssueKind,
    pub span: Span,
    pub matched_text: String,
}

/// Imaging shorthand flagged by default.
pub const DEFAULT_SHORTHAND: &[&str] = &["T1WI", "T2WI", "T2-tse-fs-cor", "T2-tse-fs-tra", "fs"];

static FIGURE_REF: LazyLock<Regex> = LazyLock::new(|| {
    // A parenthesised reference such as "(Fig. 2A, B)" is one span, parentheses included.
    Regex::new(
            r"\(\s*Fig(?:ure)?s?\.?\s*\d+[A-Za-z]?(?:\s*(?:,|and|[-–])\s*\d*[A-Za-z]?)*\s*\)|\bFig(?:ure)?s?\.?\s*\d+[A-Za-z]?\b",
        )
        .unwrap()
});
static CITATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\s*\d+(?:\s*[-–,]\s*\d+)*\s*\]|\(\s*\d+(?:\s*[-–,]\s*\d+)*\s*\)").unwrap());
static CROSS_REF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:see|cf\.)\s+(?:the\s+)?(?:sections?|sect\.|tables?|text|appendix|supplementary\s+(?:material|figures?|tables?|data)|above|below)(?:\s+[0-9][\w.]*)?",
    )
    .unwrap()
});
static FRAGMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*([A-Za-z])\s+[A-Z][a-z]").unwrap());

/// Rule-based caption scanner. The shorthand lexicon is configurable.
#[derive(Debug, Clone)]
pub struct IssueScanner {
    shorthand: Vec<String>,
}

impl Default for IssueScanner {
    fn default() -> Self {
        Self::with_shorthand(DEFAULT_SHORTHAND.iter().map(|s| s.to_string()))
    }
}

impl IssueScanner {
    pub fn with_shorthand(lexicon: impl IntoIterator<Item = String>) -> Self {
        Self {
            shorthand: lexicon.into_iter().collect(),
        }
    }

    /// Returns issues ordered by start offset, then kind.
    pub fn scan(&self, caption: &str) -> Vec<CaptionIssue> {
        let mut found: Vec<(IssueKind, usize, usize)> = Vec::new();
        for m in FIGURE_REF.find_iter(caption) {
            found.push((IssueKind::FigureReference, m.start(), m.end()));
        }
        for m in CITATION.find_iter(caption) {
            found.push((IssueKind::CitationMarker, m.start(), m.end()));
        }
        for m in CROSS_REF.find_iter(caption) {
            found.push((IssueKind::CrossReference, m.start(), m.end()));
        }
        if let Some(c) = FRAGMENT.captures(caption) {
            let g = c.get(1).unwrap();
            found.push((IssueKind::Fragment, g.start(), g.end()));
        }
        for (start, end) in shorthand_tokens(caption) {
            if self.shorthand.iter().any(|s| s == &caption[start..end]) {
                found.push((IssueKind::ImagingShorthand, start, end));
            }
        }
        found.sort_by_key(|&(k, s, _)| (s, k));
        found
            .into_iter()
            .map(|(kind, start, end)| CaptionIssue {
                kind,
                span: Span {
                    start: caption[..start].chars().count(),
                    end: caption[..end].chars().count(),
                },
                matched_text: caption[start..end].to_string(),
            })
            .collect()
    }
}

/// Byte ranges of whitespace-separated tokens with surrounding punctuation trimmed.
fn shorthand_tokens(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    const TRIM: &[char] = &['.', ',', ';', ':', '(', ')', '[', ']', '"', '\'', '!', '?'];
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                let tok = &text[s..i];
                let lead = tok.len() - tok.trim_start_matches(TRIM).len();
                let trimmed = tok.trim_matches(TRIM);
                if !trimmed.is_empty() {
                    out.push((s + lead, s + lead + trimmed.len()));
                }
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    out.into_iter()
}

/// Scans with the default rule set.
pub fn scan_caption_issues(raw_caption: &str) -> Vec<CaptionIssue> {
    static DEFAULT: LazyLock<IssueScanner> = LazyLock::new(IssueScanner::default);
    DEFAULT.scan(raw_caption)
}
