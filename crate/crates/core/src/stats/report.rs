use serde::{Deserialize, Serialize};

use super::{BootstrapSummary, StatsError, WilcoxonResult};

/// Number formatting class of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricScale {
    /// Fractions in [0, 1], four decimals.
    #[default]
    Fraction,
    /// Percentages, two decimals.
    Percentage,
}

impl MetricScale {
    fn decimals(self) -> usize {
        match self {
            MetricScale::Fraction => 4,
            MetricScale::Percentage => 2,
        }
    }
}

/// `mean ± std`.
pub fn format_mean_std(mean: f64, std: f64, scale: MetricScale) -> String {
    let d = scale.decimals();
    format!("{mean:.d$} ± {std:.d$}")
}

/// `(p < 0.0001)` below the display floor, `(p = 0.XXXX)` otherwise.
pub fn format_p_value(p: f64) -> String {
    if p < 1e-4 {
        "(p < 0.0001)".to_string()
    } else {
        format!("(p = {p:.4})")
    }
}

/// `mean ± std (p ...)` for a model compared against a baseline.
pub fn format_comparison(
    summary: &BootstrapSummary,
    baseline: &BootstrapSummary,
    test: &WilcoxonResult,
    scale: MetricScale,
) -> Result<String, StatsError> {
    if summary.metric_id != baseline.metric_id || summary.config != baseline.config {
        return Err(StatsError::ConfigMismatch);
    }
    Ok(format!(
        "{} {}",
        format_mean_std(summary.mean, summary.std, scale),
        format_p_value(test.p_value)
    ))
}
