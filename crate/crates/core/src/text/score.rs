use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::embed::{EmbedError, EmbeddingProvider, TextRef};
use super::{bertscore, bleu, rouge_l, sbert_similarity, tokenize, BertScore, MetricError, TokenPolicy};
use crate::par;

/// A candidate/reference pair. `id` keys precomputed embeddings as
/// `<id>/candidate` and `<id>/reference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextPair {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub candidate: String,
    pub reference: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub policy: TokenPolicy,
    pub beta: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            policy: TokenPolicy::Default,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextScoreSet {
    /// Cumulative BLEU-1 through BLEU-4.
    pub bleu: [f64; 4],
    pub rouge_l: RougeScore,
    pub bertscore: BertScore,
    pub sbert: f64,
    pub policy_id: String,
    pub embedding_model: String,
}

impl TextScoreSet {
    /// Flat metric map, the per-instance input format of `compare`.
    pub fn values(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for (i, b) in self.bleu.iter().enumerate() {
            m.insert(format!("bleu_{}", i + 1), *b);
        }
        m.insert("rouge_l_f".into(), self.rouge_l.f);
        m.insert("bertscore_p".into(), self.bertscore.precision);
        m.insert("bertscore_r".into(), self.bertscore.recall);
        m.insert("bertscore_f1".into(), self.bertscore.f1);
        m.insert("sbert".into(), self.sbert);
        m
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

pub fn score_pair(
    pair: &TextPair,
    provider: &dyn EmbeddingProvider,
    config: &ScoreConfig,
) -> Result<TextScoreSet, ScoreError> {
    let cand = tokenize(&pair.candidate, config.policy);
    let reference = tokenize(&pair.reference, config.policy);
    let mut bleu_scores = [0.0; 4];
    for (n, slot) in bleu_scores.iter_mut().enumerate() {
        *slot = bleu(&cand, &reference, n + 1)?.0;
    }
    let lcs = rouge_l(&cand, &reference, config.beta)?;

    let cand_id = format!("{}/candidate", pair.id);
    let ref_id = format!("{}/reference", pair.id);
    let texts = [
        TextRef {
            id: &cand_id,
            text: &pair.candidate,
        },
        TextRef {
            id: &ref_id,
            text: &pair.reference,
        },
    ];
    let tokens = provider.embed_tokens(&texts)?;
    let bert = bertscore(&tokens[0], &tokens[1])?;
    let sentences = provider.embed_sentences(&texts)?;
    let sbert = sbert_similarity(&sentences[0], &sentences[1])?;

    Ok(TextScoreSet {
        bleu: bleu_scores,
        rouge_l: RougeScore {
            recall: lcs.recall,
            precision: lcs.precision,
            f: lcs.f,
        },
        bertscore: bert,
        sbert,
        policy_id: config.policy.id().to_string(),
        embedding_model: provider.model_id().to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub scores: TextScoreSet,
}

/// Why a pair could not be scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// The pair itself is unscorable (e.g. empty candidate).
    Metric,
    /// Embeddings were missing or malformed.
    Embedding,
    /// The embedding service could not be reached or returned an error status.
    Service,
}

impl ScoreError {
    pub fn kind(&self) -> FailureKind {
        match self {
            ScoreError::Metric(_) | ScoreError::Embed(EmbedError::Metric(_)) => FailureKind::Metric,
            ScoreError::Embed(EmbedError::Transport(_) | EmbedError::Service { .. }) => FailureKind::Service,
            ScoreError::Embed(_) => FailureKind::Embedding,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub id: String,
    pub kind: FailureKind,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub scored: Vec<ScoredPair>,
    pub failures: Vec<PairFailure>,
}

impl CorpusScores {
    /// Mean of each flat metric over successfully scored pairs.
    pub fn means(&self) -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for p in &self.scored {
            for (k, v) in p.scores.values() {
                *sums.entry(k).or_default() += v;
            }
        }
        let n = self.scored.len().max(1) as f64;
        sums.into_iter().map(|(k, v)| (k, v / n)).collect()
    }
}

/// Scores every pair, isolating per-pair failures. Output preserves input order.
pub fn score_corpus(pairs: &[TextPair], provider: &dyn EmbeddingProvider, config: &ScoreConfig) -> CorpusScores {
    let op = |p: &TextPair| score_pair(p, provider, config);
    let results = match provider.max_in_flight() {
        Some(limit) => par::map_bounded(limit, pairs, op),
        None => par::map(pairs, op),
    };
    let mut out = CorpusScores::default();
    for (pair, r) in pairs.iter().zip(results) {
        match r {
            Ok(scores) => out.scored.push(ScoredPair {
                id: pair.id.clone(),
                model_id: pair.model_id.clone(),
                scores,
            }),
            Err(e) => out.failures.push(PairFailure {
                id: pair.id.clone(),
                kind: e.kind(),
                error: e.to_string(),
            }),
        }
    }
    out
}
