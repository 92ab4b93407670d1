use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{MetricError, TokenSequence};

/// Per-order modified precisions and the brevity penalty behind one BLEU score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramPrecisionProfile {
    /// Modified n-gram precision for orders `1..=N`.
    pub precisions: Vec<f64>,
    /// Uniform weights `1/N`.
    pub weights: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU against a single reference, no smoothing.
///
/// A zero precision at any order (including orders longer than the candidate)
/// yields a score of exactly 0.
pub fn bleu(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    max_order: usize,
) -> Result<(f64, NGramPrecisionProfile), MetricError> {
    if !(1..=4).contains(&max_order) {
        return Err(MetricError::InvalidOrder(max_order));
    }
    if candidate.policy != reference.policy {
        return Err(MetricError::PolicyMismatch(
            candidate.policy.to_string(),
            reference.policy.to_string(),
        ));
    }
    let c = candidate.len();
    let r = reference.len();
    if c == 0 {
        return Err(MetricError::EmptyCandidate);
    }

    let mut precisions = Vec::with_capacity(max_order);
    for n in 1..=max_order {
        let cand = ngram_counts(&candidate.tokens, n);
        let total: usize = cand.values().sum();
        if total == 0 {
            precisions.push(0.0);
            continue;
        }
        let refc = ngram_counts(&reference.tokens, n);
        let clipped: usize = cand
            .iter()
            .map(|(g, &k)| k.min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        precisions.push(clipped as f64 / total as f64);
    }

    let brevity_penalty = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let w = 1.0 / max_order as f64;
    let weights = vec![w; max_order];
    let score = if precisions.contains(&0.0) {
        0.0
    } else if precisions.iter().all(|&p| p == 1.0) {
        brevity_penalty
    } else {
        brevity_penalty * precisions.iter().map(|p| w * p.ln()).sum::<f64>().exp()
    };
    Ok((
        score,
        NGramPrecisionProfile {
            precisions,
            weights,
            brevity_penalty,
            candidate_len: c,
            reference_len: r,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, TokenPolicy};

    fn seq(s: &str) -> TokenSequence {
        tokenize(s, TokenPolicy::Default)
    }

    #[test]
    fn identity_is_one() {
        let x = seq("the cat sat on the mat");
        let (score, prof) = bleu(&x, &x, 4).unwrap();
        assert_eq!(score, 1.0);
        assert_eq!(prof.brevity_penalty, 1.0);
        assert!(prof.precisions.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn brevity_penalty_case() {
        // BP = exp(1 - 6/3) with p_1 = 1.
        let (score, prof) = bleu(&seq("the cat sat"), &seq("the cat sat on the mat"), 1).unwrap();
        assert_eq!(prof.precisions, vec![1.0]);
        assert!((prof.brevity_penalty - (-1f64).exp()).abs() < 1e-12);
        assert!((score - 0.367_879_441_171_442_3).abs() < 1e-12);
    }

    #[test]
    fn zero_overlap_and_short_candidates() {
        assert_eq!(bleu(&seq("a b"), &seq("c d"), 1).unwrap().0, 0.0);
        // No 4-grams in a 3-token candidate.
        let (s, prof) = bleu(&seq("a b c"), &seq("a b c"), 4).unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(prof.precisions[3], 0.0);
    }

    #[test]
    fn clipping() {
        // "the the the" vs "the cat": clipped 1/3.
        let (s, prof) = bleu(&seq("the the the"), &seq("the cat"), 1).unwrap();
        assert!((prof.precisions[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(bleu(&seq(""), &seq("a"), 1).unwrap_err(), MetricError::EmptyCandidate);
        assert_eq!(bleu(&seq("a"), &seq("a"), 0).unwrap_err(), MetricError::InvalidOrder(0));
        assert_eq!(bleu(&seq("a"), &seq("a"), 5).unwrap_err(), MetricError::InvalidOrder(5));
    }
}
