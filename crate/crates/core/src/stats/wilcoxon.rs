use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::StatsError;

/// Largest tie-free sample size evaluated with the exact null distribution.
pub const EXACT_MAX_N: usize = 25;
const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub n_effective: usize,
    pub zeros_dropped: usize,
    pub method: WilcoxonMethod,
    /// Two-sided.
    pub p_value: f64,
}

/// Average ranks (1-based) of `values`, plus the sizes of tie groups.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// Number of subsets of `{1..n}` with each possible rank sum.
pub(crate) fn rank_sum_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

/// Largest sample size the exact distribution can be computed for.
const EXACT_LIMIT: usize = 63;

/// Paired two-sided Wilcoxon signed-rank test on `a - b`.
///
/// Zero differences are dropped. Exact when at most 25 pairs remain and the
/// absolute differences are tie-free; otherwise a normal approximation with
/// tie-corrected variance and a 0.5 continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_signed_rank_with(a, b, None)
}

/// As [`wilcoxon_signed_rank`], optionally forcing the p-value method.
///
/// Forcing [`WilcoxonMethod::Exact`] fails with `ExactUnavailable` when the
/// absolute differences contain ties or more than 63 pairs remain.
pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    force: Option<WilcoxonMethod>,
) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let zeros_dropped = diffs.len() - nonzero.len();
    let n = nonzero.len();
    if n < MIN_PAIRS {
        return Err(StatsError::InsufficientPairs(n));
    }

    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let method = match force {
        Some(WilcoxonMethod::Exact) if !ties.is_empty() || n > EXACT_LIMIT => return Err(StatsError::ExactUnavailable),
        Some(m) => m,
        None if n <= EXACT_MAX_N && ties.is_empty() => WilcoxonMethod::Exact,
        None => WilcoxonMethod::NormalApprox,
    };
    let p_value = if method == WilcoxonMethod::Exact {
        // Ranks are the integers 1..=n, so the statistic is an integer.
        let w = statistic.round() as usize;
        let counts = rank_sum_counts(n);
        let tail: u64 = counts[..=w].iter().sum();
        let p = 2.0 * tail as f64 / (1u64 << n) as f64;
        p.min(1.0)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let dev = ((statistic - mean).abs() - 0.5).max(0.0);
        let z = dev / var.sqrt();
        let p = erfc(z / std::f64::consts::SQRT_2);
        p.clamp(f64::MIN_POSITIVE, 1.0)
    };

    Ok(WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        n_effective: n,
        zeros_dropped,
        method,
        p_value,
    })
}
