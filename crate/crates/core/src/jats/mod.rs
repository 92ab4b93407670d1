//! JATS full-text parsing: article metadata, figure/caption pairs, case-report
//! detection and caption artifact scanning.

mod issues;

pub use issues::{scan_caption_issues, CaptionIssue, IssueKind, IssueScanner, Span, DEFAULT_SHORTHAND};

use std::collections::HashSet;

use roxmltree::{Document, Node, ParsingOptions};
use serde::{Deserialize, Serialize};

use crate::par;

const XLINK_NS: &str = "http://www.w3.org/1999/xlink";

/// The 82 ophthalmology journals of the reference corpus, one per line.
pub const OPHTHALMOLOGY_JOURNALS: &str = include_str!("../../data/ophthalmology_journals.txt");

#[derive(Debug, thiserror::Error)]
pub enum JatsError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("root element is <{0}>, expected <article>")]
    NotJats(String),
    #[error("article has no PMC identifier")]
    MissingArticleId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArticleType {
    Research,
    CaseReport,
    Review,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum License {
    #[serde(rename = "CC-BY")]
    CcBy,
    #[serde(rename = "CC-BY-NC")]
    CcByNc,
    #[serde(rename = "CC-BY-NC-SA")]
    CcByNcSa,
    #[serde(rename = "CC0")]
    Cc0,
    #[serde(rename = "other")]
    Other,
}

impl License {
    /// Classifies a license URL or free-text statement.
    pub fn classify(text: &str) -> Self {
        let t = text.to_ascii_lowercase();
        if t.contains("publicdomain/zero") || t.contains("cc0") {
            return License::Cc0;
        }
        let compact: String = t.chars().filter(|c| !c.is_whitespace()).collect();
        let has = |needle: &str| {
            compact.contains(&format!("licenses/{needle}/"))
                || compact.contains(&format!("cc-{needle}"))
                || compact.contains(&format!("cc{needle}"))
        };
        if has("by-nc-sa") {
            License::CcByNcSa
        } else if has("by-nc-nd") || has("by-nd") || has("by-sa") {
            License::Other
        } else if has("by-nc") {
            License::CcByNc
        } else if has("by") || t.contains("creative commons attribution license") {
            License::CcBy
        } else {
            License::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub pmcid: String,
    pub journal: String,
    pub title: String,
    pub article_type: ArticleType,
    pub license: License,
    pub figure_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigurePair {
    pub article: String,
    pub figure_id: String,
    pub graphic_uri: String,
    pub raw_caption: String,
    pub issues: Vec<CaptionIssue>,
    #[serde(default)]
    pub revised_caption: Option<String>,
}

/// Result of parsing one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedArticle {
    pub record: ArticleRecord,
    pub figures: Vec<FigurePair>,
    /// `fig` elements lacking a graphic reference or a non-empty caption.
    pub skipped_figures: usize,
    pub body_text: String,
}

/// Phrase list used to flag case reports from title and body text.
#[derive(Debug, Clone)]
pub struct CaseReportDetector {
    phrases: Vec<String>,
}

impl Default for CaseReportDetector {
    fn default() -> Self {
        Self::new(["case report", "case presentation"])
    }
}

impl CaseReportDetector {
    pub fn new<S: AsRef<str>>(phrases: impl IntoIterator<Item = S>) -> Self {
        Self {
            phrases: phrases.into_iter().map(|p| p.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn detect(&self, record: &ArticleRecord, body_text: &str) -> bool {
        if record.article_type == ArticleType::CaseReport {
            return true;
        }
        let title = record.title.to_lowercase();
        let body = body_text.to_lowercase();
        self.phrases
            .iter()
            .any(|p| title.contains(p.as_str()) || body.contains(p.as_str()))
    }
}

/// Case-report check with the default phrase list.
pub fn detect_case_report(record: &ArticleRecord, body_text: &str) -> bool {
    CaseReportDetector::default().detect(record, body_text)
}

/// Collapses whitespace runs to single spaces and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Elements whose boundaries act as whitespace when flattening text.
const BLOCK_ELEMENTS: &[&str] = &[
    "p",
    "title",
    "sec",
    "label",
    "caption",
    "list-item",
    "list",
    "disp-quote",
];

fn flatten_into(node: Node, out: &mut String) {
    for child in node.children() {
        if child.is_text() {
            out.push_str(child.text().unwrap_or(""));
        } else if child.is_element() {
            let block = BLOCK_ELEMENTS.contains(&child.tag_name().name());
            if block {
                out.push(' ');
            }
            flatten_into(child, out);
            if block {
                out.push(' ');
            }
        }
    }
}

/// Plain text of `node` with inline markup dropped and whitespace normalized.
fn flat_text(node: Node) -> String {
    let mut s = String::new();
    flatten_into(node, &mut s);
    normalize_whitespace(&s)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn descendant<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.descendants()
        .find(|c| c.is_element() && c.tag_name().name() == name)
}

fn href(node: Node) -> Option<String> {
    node.attribute((XLINK_NS, "href"))
        .or_else(|| node.attribute("href"))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
}

fn extract_pmcid(meta: Node) -> Option<String> {
    meta.children()
        .filter(|c| c.is_element() && c.tag_name().name() == "article-id")
        .find(|c| {
            matches!(
                c.attribute("pub-id-type"),
                Some("pmc") | Some("pmcid") | Some("pmc-uid")
            )
        })
        .and_then(|c| c.text())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            if s.starts_with("PMC") {
                s.to_string()
            } else {
                format!("PMC{s}")
            }
        })
}

fn extract_license(article: Node) -> License {
    let Some(lic) = descendant(article, "license") else {
        return License::Other;
    };
    let mut evidence = String::new();
    if let Some(h) = href(lic) {
        evidence.push_str(&h);
        evidence.push(' ');
    }
    for n in lic.descendants().filter(|n| n.is_element()) {
        if n.tag_name().name() == "license_ref" || n.tag_name().name() == "ext-link" {
            evidence.push_str(n.text().unwrap_or(""));
            if let Some(h) = href(n) {
                evidence.push(' ');
                evidence.push_str(&h);
            }
            evidence.push(' ');
        }
    }
    evidence.push_str(&flat_text(lic));
    License::classify(&evidence)
}

/// Parses one JATS document.
pub fn parse_article(jats_document: &str) -> Result<ParsedArticle, JatsError> {
    parse_article_with(jats_document, &CaseReportDetector::default())
}

pub fn parse_article_with(jats_document: &str, detector: &CaseReportDetector) -> Result<ParsedArticle, JatsError> {
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let doc = Document::parse_with_options(jats_document, opts).map_err(|e| JatsError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "article" {
        return Err(JatsError::NotJats(root.tag_name().name().to_string()));
    }

    let front = child(root, "front");
    let meta = front.and_then(|f| child(f, "article-meta"));
    let pmcid = meta.and_then(extract_pmcid).ok_or(JatsError::MissingArticleId)?;
    let journal = front
        .and_then(|f| child(f, "journal-meta"))
        .and_then(|j| descendant(j, "journal-title"))
        .map(flat_text)
        .unwrap_or_default();
    let title = meta
        .and_then(|m| child(m, "title-group"))
        .and_then(|t| child(t, "article-title"))
        .map(flat_text)
        .unwrap_or_default();
    let article_type = match root.attribute("article-type") {
        Some("case-report") => ArticleType::CaseReport,
        Some("research-article") => ArticleType::Research,
        Some("review-article") => ArticleType::Review,
        _ => ArticleType::Other,
    };
    let license = meta.map(extract_license).unwrap_or(License::Other);
    let body_text = child(root, "body").map(flat_text).unwrap_or_default();

    let mut figures = Vec::new();
    let mut skipped = 0usize;
    for (i, fig) in root
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "fig")
        .enumerate()
    {
        let graphic = fig
            .descendants()
            .find(|n| n.is_element() && n.tag_name().name() == "graphic")
            .and_then(href);
        let caption = child(fig, "caption").map(flat_text).filter(|c| !c.is_empty());
        match (graphic, caption) {
            (Some(graphic_uri), Some(raw_caption)) => {
                let figure_id = fig
                    .attribute("id")
                    .map(String::from)
                    .unwrap_or_else(|| format!("fig{}", i + 1));
                figures.push(FigurePair {
                    article: pmcid.clone(),
                    figure_id,
                    graphic_uri,
                    issues: scan_caption_issues(&raw_caption),
                    raw_caption,
                    revised_caption: None,
                });
            }
            _ => skipped += 1,
        }
    }

    let mut record = ArticleRecord {
        pmcid,
        journal,
        title,
        article_type,
        license,
        figure_count: figures.len(),
    };
    if record.article_type != ArticleType::CaseReport && detector.detect(&record, &body_text) {
        record.article_type = ArticleType::CaseReport;
    }
    Ok(ParsedArticle {
        record,
        figures,
        skipped_figures: skipped,
        body_text,
    })
}

/// Case-insensitive journal whitelist.
#[derive(Debug, Clone)]
pub struct JournalFilter {
    names: HashSet<String>,
}

impl JournalFilter {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            names: names
                .into_iter()
                .map(|n| Self::key(n.as_ref()))
                .filter(|k| !k.is_empty())
                .collect(),
        }
    }

    /// The bundled ophthalmology journal list.
    pub fn ophthalmology() -> Self {
        Self::new(OPHTHALMOLOGY_JOURNALS.lines())
    }

    fn key(name: &str) -> String {
        normalize_whitespace(&name.replace('&', " and ").to_lowercase())
    }

    pub fn allows(&self, journal: &str) -> bool {
        let k = Self::key(journal);
        if self.names.contains(&k) {
            return true;
        }
        // "Eye (London)" and "Eye" name the same journal.
        match k.find(" (") {
            Some(i) => self.names.iter().any(|n| n.split(" (").next() == Some(&k[..i])),
            None => self.names.iter().any(|n| n.split(" (").next() == Some(k.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionFailure {
    pub source: String,
    pub error: String,
}

/// Aggregate output of a corpus run.
#[derive(Debug, Clone, Default)]
pub struct CorpusExtraction {
    pub articles: Vec<ArticleRecord>,
    pub figures: Vec<FigurePair>,
    pub skipped_figures: usize,
    pub filtered_out: usize,
    pub failures: Vec<ExtractionFailure>,
}

/// Parses `(source name, document)` pairs in parallel. Output order follows input order.
pub fn extract_corpus(documents: &[(String, String)], filter: Option<&JournalFilter>) -> CorpusExtraction {
    let parsed = par::map(documents, |(_, text)| parse_article(text));
    let mut out = CorpusExtraction::default();
    for ((source, _), result) in documents.iter().zip(parsed) {
        match result {
            Ok(p) => {
                if filter.is_some_and(|f| !f.allows(&p.record.journal)) {
                    out.filtered_out += 1;
                    continue;
                }
                out.skipped_figures += p.skipped_figures;
                out.articles.push(p.record);
                out.figures.extend(p.figures);
            }
            Err(e) => out.failures.push(ExtractionFailure {
                source: source.clone(),
                error: e.to_string(),
            }),
        }
    }
    out
}
