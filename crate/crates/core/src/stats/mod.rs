//! Paired bootstrap resampling, Wilcoxon signed-rank tests and report strings.

mod bootstrap;
mod report;
mod wilcoxon;

pub use bootstrap::{
    bootstrap, bootstrap_on_schedule, mean_std, BootstrapConfig, BootstrapSummary, ResampleSchedule, ResampleUnit,
};
pub use report::{format_comparison, format_mean_std, format_p_value, MetricScale};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no instances")]
    EmptyInput,
    #[error("sample size and repeats must be positive")]
    InvalidConfig,
    #[error("schedule was built for {expected} instances, got {actual}")]
    ScheduleMismatch { expected: usize, actual: usize },
    #[error("{0} vs {1} paired values")]
    LengthMismatch(usize, usize),
    #[error("only {0} non-zero differences; at least 5 required")]
    InsufficientPairs(usize),
    #[error("non-finite difference")]
    NonFinite,
    #[error("exact p-value needs tie-free differences and at most 63 pairs")]
    ExactUnavailable,
    #[error("summaries differ in metric or bootstrap configuration")]
    ConfigMismatch,
}

/// Model-vs-baseline comparison on one metric over a shared resample schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric_id: String,
    pub model: String,
    pub baseline: String,
    pub scale: MetricScale,
    pub model_summary: BootstrapSummary,
    pub baseline_summary: BootstrapSummary,
    pub test: WilcoxonResult,
    pub formatted: String,
}

/// Bootstraps two models on the same schedule and tests the paired replicates.
#[allow(clippy::too_many_arguments)]
pub fn compare_paired<T, F>(
    model: (&str, &[T]),
    baseline: (&str, &[T]),
    metric_id: &str,
    metric: F,
    schedule: &ResampleSchedule,
    scale: MetricScale,
    mode: crate::par::Execution,
) -> Result<Comparison, StatsError>
where
    T: Sync,
    F: Fn(&[&T]) -> f64 + Sync + Send,
{
    let ms = bootstrap_on_schedule(model.1, metric_id, &metric, schedule, mode)?;
    let bs = bootstrap_on_schedule(baseline.1, metric_id, &metric, schedule, mode)?;
    let test = wilcoxon_signed_rank(&ms.replicate_values, &bs.replicate_values)?;
    let formatted = format_comparison(&ms, &bs, &test, scale)?;
    Ok(Comparison {
        metric_id: metric_id.to_string(),
        model: model.0.to_string(),
        baseline: baseline.0.to_string(),
        scale,
        model_summary: ms,
        baseline_summary: bs,
        test,
        formatted,
    })
}
