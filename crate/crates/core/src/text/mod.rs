//! Text-generation metrics: BLEU-n, ROUGE-L, BERTScore and sentence-embedding
//! cosine similarity, plus the embedding providers they draw vectors from.

mod bertscore;
mod bleu;
pub mod embed;
mod rouge;
mod score;
mod tokenize;

pub use bertscore::{
    bertscore, bertscore_with, sbert_similarity, BertScore, DotMode, SentenceEmbedding, TokenEmbeddingMatrix,
};
pub use bleu::{bleu, NGramPrecisionProfile};
pub use rouge::{lcs_len, rouge_l, LcsAlignment};
pub use score::{
    score_corpus, score_pair, CorpusScores, FailureKind, PairFailure, RougeScore, ScoreConfig, ScoreError, ScoredPair,
    TextPair, TextScoreSet,
};
pub use tokenize::{tokenize, TokenPolicy, TokenSequence};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("unknown tokenization policy `{0}`")]
    UnknownPolicy(String),
    #[error("candidate has no tokens")]
    EmptyCandidate,
    #[error("BLEU order must be between 1 and 4, got {0}")]
    InvalidOrder(usize),
    #[error("sequence is empty")]
    EmptySequence,
    #[error("beta must be positive")]
    InvalidBeta,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("embedding matrix is empty")]
    EmptyMatrix,
    #[error("zero vector")]
    ZeroVector,
    #[error("token embeddings must be unit-normalized for cosine mode")]
    NotNormalized,
    #[error("token sequences use different policies: {0} vs {1}")]
    PolicyMismatch(String, String),
}
