use serde::{Deserialize, Serialize};

use super::{MetricError, TokenSequence};

/// LCS-based recall, precision and F-measure between a candidate `X` and a reference `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcsAlignment {
    pub lcs_len: usize,
    pub len_x: usize,
    pub len_y: usize,
    /// `lcs_len / len_y`
    pub recall: f64,
    /// `lcs_len / len_x`
    pub precision: f64,
    pub beta: f64,
    pub f: f64,
}

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence, beta: f64) -> Result<LcsAlignment, MetricError> {
    if beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
        return Err(MetricError::InvalidBeta);
    }
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptySequence);
    }
    if candidate.policy != reference.policy {
        return Err(MetricError::PolicyMismatch(
            candidate.policy.to_string(),
            reference.policy.to_string(),
        ));
    }
    let lcs = lcs_len(&candidate.tokens, &reference.tokens);
    let len_x = candidate.len();
    let len_y = reference.len();
    let recall = lcs as f64 / len_y as f64;
    let precision = lcs as f64 / len_x as f64;
    let b2 = beta * beta;
    let f = if lcs == 0 {
        0.0
    } else {
        (1.0 + b2) * recall * precision / (recall + b2 * precision)
    };
    Ok(LcsAlignment {
        lcs_len: lcs,
        len_x,
        len_y,
        recall,
        precision,
        beta,
        f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::TokenPolicy;
    use proptest::prelude::*;

    fn seq(s: &[&str]) -> TokenSequence {
        TokenSequence::from_tokens(s.iter().copied(), TokenPolicy::Default)
    }

    #[test]
    fn identity() {
        let x = seq(&["a", "b", "c"]);
        let a = rouge_l(&x, &x, 1.0).unwrap();
        assert_eq!((a.recall, a.precision, a.f), (1.0, 1.0, 1.0));
    }

    #[test]
    fn worked_example() {
        let a = rouge_l(&seq(&["a", "b", "c", "d"]), &seq(&["a", "c", "d", "e"]), 1.0).unwrap();
        assert_eq!(a.lcs_len, 3);
        assert_eq!(a.recall, 0.75);
        assert_eq!(a.precision, 0.75);
        assert!((a.f - 0.75).abs() < 1e-15);
    }

    #[test]
    fn disjoint_and_errors() {
        assert_eq!(rouge_l(&seq(&["a"]), &seq(&["b"]), 1.0).unwrap().f, 0.0);
        assert_eq!(
            rouge_l(&seq(&[]), &seq(&["b"]), 1.0).unwrap_err(),
            MetricError::EmptySequence
        );
        assert_eq!(
            rouge_l(&seq(&["a"]), &seq(&["b"]), 0.0).unwrap_err(),
            MetricError::InvalidBeta
        );
    }

    #[test]
    fn beta_weights_recall() {
        // R = 1/2, P = 1: large beta pulls F toward recall.
        let a = rouge_l(&seq(&["a"]), &seq(&["a", "b"]), 10.0).unwrap();
        assert!((a.f - 0.5).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn symmetric_under_swap_at_beta_one(
            x in prop::collection::vec("[a-e]", 1..12),
            y in prop::collection::vec("[a-e]", 1..12),
        ) {
            let sx = TokenSequence::from_tokens(x, TokenPolicy::Default);
            let sy = TokenSequence::from_tokens(y, TokenPolicy::Default);
            let xy = rouge_l(&sx, &sy, 1.0).unwrap();
            let yx = rouge_l(&sy, &sx, 1.0).unwrap();
            prop_assert!((xy.f - yx.f).abs() < 1e-12);
            prop_assert_eq!(xy.recall, yx.precision);
            prop_assert_eq!(xy.precision, yx.recall);
            prop_assert!((0.0..=1.0).contains(&xy.f));
            prop_assert!(xy.lcs_len <= xy.len_x.min(xy.len_y));
        }
    }
}
