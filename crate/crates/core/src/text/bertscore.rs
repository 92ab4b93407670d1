use serde::{Deserialize, Serialize};

use super::MetricError;

const UNIT_TOLERANCE: f64 = 1e-6;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One vector per token, all of the same dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbeddingMatrix {
    vectors: Vec<Vec<f64>>,
    dim: usize,
    normalized: bool,
}

impl TokenEmbeddingMatrix {
    /// Unit-normalizes every vector on ingest.
    pub fn normalized(vectors: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let mut m = Self::raw(vectors)?;
        for v in &mut m.vectors {
            let n = norm(v);
            if n == 0.0 {
                return Err(MetricError::ZeroVector);
            }
            v.iter_mut().for_each(|x| *x /= n);
        }
        m.normalized = true;
        Ok(m)
    }

    /// Keeps vectors as given. `normalized` is set if they already have unit norm.
    pub fn raw(vectors: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(MetricError::DimMismatch(dim, v.len()));
        }
        let normalized = !vectors.is_empty() && vectors.iter().all(|v| (norm(v) - 1.0).abs() <= UNIT_TOLERANCE);
        Ok(Self {
            vectors,
            dim,
            normalized,
        })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Sentence-level embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEmbedding {
    pub vector: Vec<f64>,
}

impl SentenceEmbedding {
    pub fn new(vector: Vec<f64>) -> Self {
        Self { vector }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// How token similarities are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DotMode {
    /// Requires unit-normalized inputs; the dot product is the cosine.
    #[default]
    Cosine,
    /// Plain dot product on whatever vectors are supplied.
    RawDot,
}

/// Greedy-matching BERTScore without IDF weighting or baseline rescaling.
pub fn bertscore(cand: &TokenEmbeddingMatrix, reference: &TokenEmbeddingMatrix) -> Result<BertScore, MetricError> {
    bertscore_with(cand, reference, DotMode::Cosine)
}

pub fn bertscore_with(
    cand: &TokenEmbeddingMatrix,
    reference: &TokenEmbeddingMatrix,
    mode: DotMode,
) -> Result<BertScore, MetricError> {
    if cand.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyMatrix);
    }
    if cand.dim != reference.dim {
        return Err(MetricError::DimMismatch(cand.dim, reference.dim));
    }
    if mode == DotMode::Cosine && !(cand.normalized && reference.normalized) {
        return Err(MetricError::NotNormalized);
    }
    // sim[i][j] = x_i . y_j, computed once and scanned along both axes.
    let sim: Vec<Vec<f64>> = cand
        .vectors
        .iter()
        .map(|x| reference.vectors.iter().map(|y| dot(x, y)).collect())
        .collect();
    let precision = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / cand.len() as f64;
    let recall = (0..reference.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BertScore { precision, recall, f1 })
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn sbert_similarity(u: &SentenceEmbedding, v: &SentenceEmbedding) -> Result<f64, MetricError> {
    if u.dim() != v.dim() {
        return Err(MetricError::DimMismatch(u.dim(), v.dim()));
    }
    let nu = norm(&u.vector);
    let nv = norm(&v.vector);
    if nu == 0.0 || nv == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    Ok((dot(&u.vector, &v.vector) / (nu * nv)).clamp(-1.0, 1.0))
}
