//! Embedding providers feeding BERTScore and sentence similarity.
//!
//! Three backends share one trait: a one-hot stub (no model needed), a
//! precomputed-embedding JSONL file, and an HTTP client for the embedding
//! service protocol (`POST /v1/embed/tokens`, `POST /v1/embed/sentence`).

use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{tokenize, MetricError, SentenceEmbedding, TokenEmbeddingMatrix, TokenPolicy};

/// A text to embed, addressed by id so precomputed files can be looked up.
#[derive(Debug, Clone, Copy)]
pub struct TextRef<'a> {
    pub id: &'a str,
    pub text: &'a str,
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("no precomputed {kind} embedding for id `{id}`")]
    Missing { id: String, kind: EmbeddingKind },
    #[error("invalid embedding record: {0}")]
    Format(String),
    #[error("embedding service unreachable: {0}")]
    Transport(String),
    #[error("embedding service returned HTTP {status}: {body}")]
    Service { status: u16, body: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Tokens,
    Sentence,
}

impl std::fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbeddingKind::Tokens => "tokens",
            EmbeddingKind::Sentence => "sentence",
        })
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// Token embeddings, one matrix per input, unit-normalized.
    fn embed_tokens(&self, texts: &[TextRef<'_>]) -> Result<Vec<TokenEmbeddingMatrix>, EmbedError>;

    /// Sentence embeddings, one per input.
    fn embed_sentences(&self, texts: &[TextRef<'_>]) -> Result<Vec<SentenceEmbedding>, EmbedError>;

    /// Upper bound on concurrent calls, for providers backed by a remote service.
    fn max_in_flight(&self) -> Option<usize> {
        None
    }
}

/// One-hot embeddings over the vocabulary of each batch.
///
/// Every token type in the batch gets its own axis, so `x_i . y_j` is 1 when
/// the tokens are identical and 0 otherwise. Sentence vectors are bag-of-words
/// counts over the same axes.
#[derive(Debug, Clone, Default)]
pub struct OneHotProvider {
    policy: TokenPolicy,
}

impl OneHotProvider {
    pub fn new(policy: TokenPolicy) -> Self {
        Self { policy }
    }

    fn vocabulary(&self, texts: &[TextRef<'_>]) -> (Vec<Vec<String>>, HashMap<String, usize>) {
        let tokenized: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t.text, self.policy).tokens).collect();
        let types: BTreeSet<&String> = tokenized.iter().flatten().collect();
        let index = types.into_iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        (tokenized, index)
    }
}

impl EmbeddingProvider for OneHotProvider {
    fn model_id(&self) -> &str {
        "one-hot"
    }

    fn embed_tokens(&self, texts: &[TextRef<'_>]) -> Result<Vec<TokenEmbeddingMatrix>, EmbedError> {
        let (tokenized, index) = self.vocabulary(texts);
        let dim = index.len();
        tokenized
            .iter()
            .map(|toks| {
                let vectors = toks
                    .iter()
                    .map(|t| {
                        let mut v = vec![0.0; dim];
                        v[index[t]] = 1.0;
                        v
                    })
                    .collect();
                TokenEmbeddingMatrix::normalized(vectors).map_err(EmbedError::from)
            })
            .collect()
    }

    fn embed_sentences(&self, texts: &[TextRef<'_>]) -> Result<Vec<SentenceEmbedding>, EmbedError> {
        let (tokenized, index) = self.vocabulary(texts);
        Ok(tokenized
            .iter()
            .map(|toks| {
                let mut v = vec![0.0; index.len()];
                for t in toks {
                    v[index[t]] += 1.0;
                }
                SentenceEmbedding::new(v)
            })
            .collect())
    }
}

/// One line of a precomputed-embedding file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecomputedRecord {
    pub id: String,
    pub kind: EmbeddingKind,
    pub model: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    pub vectors: Vec<Vec<f64>>,
}

impl PrecomputedRecord {
    fn validate(&self) -> Result<(), EmbedError> {
        let bad = |msg: String| Err(EmbedError::Format(format!("id `{}`: {msg}", self.id)));
        if let Some(v) = self.vectors.iter().find(|v| v.len() != self.dim) {
            return bad(format!("vector of length {} but dim {}", v.len(), self.dim));
        }
        match self.kind {
            EmbeddingKind::Sentence if self.vectors.len() != 1 => {
                bad(format!("{} sentence vectors", self.vectors.len()))
            }
            EmbeddingKind::Tokens => match &self.tokens {
                Some(t) if t.len() != self.vectors.len() => {
                    bad(format!("{} tokens but {} vectors", t.len(), self.vectors.len()))
                }
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// Embeddings read from a JSONL file keyed by `(id, kind)`.
#[derive(Debug, Clone)]
pub struct PrecomputedProvider {
    model: String,
    records: HashMap<(String, EmbeddingKind), PrecomputedRecord>,
    raw_dot: bool,
}

impl PrecomputedProvider {
    pub fn from_jsonl(text: &str) -> Result<Self, EmbedError> {
        let rows: Vec<PrecomputedRecord> = crate::jsonl::parse(text).map_err(|e| EmbedError::Format(e.to_string()))?;
        Self::from_records(rows)
    }

    pub fn from_records(rows: Vec<PrecomputedRecord>) -> Result<Self, EmbedError> {
        let model = rows.first().map(|r| r.model.clone()).unwrap_or_default();
        let mut records = HashMap::new();
        for r in rows {
            r.validate()?;
            if r.model != model {
                return Err(EmbedError::Format(format!("mixed models `{model}` and `{}`", r.model)));
            }
            records.insert((r.id.clone(), r.kind), r);
        }
        Ok(Self {
            model,
            records,
            raw_dot: false,
        })
    }

    /// Keep token vectors un-normalized (raw dot-product mode).
    pub fn raw_dot(mut self, on: bool) -> Self {
        self.raw_dot = on;
        self
    }

    fn get(&self, id: &str, kind: EmbeddingKind) -> Result<&PrecomputedRecord, EmbedError> {
        self.records
            .get(&(id.to_string(), kind))
            .ok_or_else(|| EmbedError::Missing {
                id: id.to_string(),
                kind,
            })
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed_tokens(&self, texts: &[TextRef<'_>]) -> Result<Vec<TokenEmbeddingMatrix>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                let r = self.get(t.id, EmbeddingKind::Tokens)?;
                let m = if self.raw_dot {
                    TokenEmbeddingMatrix::raw(r.vectors.clone())
                } else {
                    TokenEmbeddingMatrix::normalized(r.vectors.clone())
                };
                m.map_err(EmbedError::from)
            })
            .collect()
    }

    fn embed_sentences(&self, texts: &[TextRef<'_>]) -> Result<Vec<SentenceEmbedding>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                Ok(SentenceEmbedding::new(
                    self.get(t.id, EmbeddingKind::Sentence)?.vectors[0].clone(),
                ))
            })
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    texts: Vec<&'a str>,
    kind: EmbeddingKind,
    normalize: bool,
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    #[allow(dead_code)]
    model: String,
    dim: usize,
    items: Vec<EmbedItem>,
}

#[derive(Debug, Deserialize)]
struct EmbedItem {
    #[serde(default)]
    tokens: Option<Vec<String>>,
    vectors: Vec<Vec<f64>>,
}

/// Client for the embedding service.
#[derive(Debug, Clone)]
pub struct HttpProvider {
    base_url: String,
    model: String,
    token: Option<String>,
    max_in_flight: usize,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            token: None,
            max_in_flight: 4,
            agent,
        }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    fn call(&self, kind: EmbeddingKind, texts: &[TextRef<'_>]) -> Result<EmbedResponse, EmbedError> {
        let url = format!("{}/v1/embed/{kind}", self.base_url);
        let body = EmbedRequest {
            model: &self.model,
            texts: texts.iter().map(|t| t.text).collect(),
            kind,
            normalize: true,
        };
        let mut req = self.agent.post(&url);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(EmbedError::Service { status, body });
        }
        let parsed: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Format(e.to_string()))?;
        if parsed.items.len() != texts.len() {
            return Err(EmbedError::Format(format!(
                "{} items for {} texts",
                parsed.items.len(),
                texts.len()
            )));
        }
        for item in &parsed.items {
            if item.vectors.iter().any(|v| v.len() != parsed.dim) {
                return Err(EmbedError::Format("vector length differs from dim".into()));
            }
            if let Some(t) = &item.tokens {
                if kind == EmbeddingKind::Tokens && t.len() != item.vectors.len() {
                    return Err(EmbedError::Format("token and vector counts differ".into()));
                }
            }
        }
        Ok(parsed)
    }
}

impl EmbeddingProvider for HttpProvider {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn embed_tokens(&self, texts: &[TextRef<'_>]) -> Result<Vec<TokenEmbeddingMatrix>, EmbedError> {
        self.call(EmbeddingKind::Tokens, texts)?
            .items
            .into_iter()
            .map(|i| TokenEmbeddingMatrix::normalized(i.vectors).map_err(EmbedError::from))
            .collect()
    }

    fn embed_sentences(&self, texts: &[TextRef<'_>]) -> Result<Vec<SentenceEmbedding>, EmbedError> {
        self.call(EmbeddingKind::Sentence, texts)?
            .items
            .into_iter()
            .map(|mut i| match i.vectors.len() {
                1 => Ok(SentenceEmbedding::new(i.vectors.remove(0))),
                n => Err(EmbedError::Format(format!("{n} sentence vectors"))),
            })
            .collect()
    }

    fn max_in_flight(&self) -> Option<usize> {
        Some(self.max_in_flight)
    }
}
