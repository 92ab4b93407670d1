use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::par::{self, Execution};
use crate::rng::{CounterRng, GENERATOR_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleUnit {
    #[default]
    Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub sample_size: usize,
    pub repeats: usize,
    pub seed: u64,
    pub unit: ResampleUnit,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            sample_size: 30,
            repeats: 100,
            seed: 0,
            unit: ResampleUnit::Instance,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if self.sample_size == 0 || self.repeats == 0 {
            return Err(StatsError::InvalidConfig);
        }
        Ok(())
    }
}

/// Resample indices for every replicate. Persist this to score a second model
/// on identical replicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleSchedule {
    pub generator: String,
    pub config: BootstrapConfig,
    pub n_instances: usize,
    pub indices: Vec<Vec<usize>>,
}

impl ResampleSchedule {
    pub fn generate(n_instances: usize, config: &BootstrapConfig) -> Result<Self, StatsError> {
        config.validate()?;
        if n_instances == 0 {
            return Err(StatsError::EmptyInput);
        }
        let rng = CounterRng::new(config.seed);
        let indices = (0..config.repeats as u64)
            .map(|r| {
                (0..config.sample_size as u64)
                    .map(|d| rng.index(r, d, n_instances))
                    .collect()
            })
            .collect();
        Ok(Self {
            generator: GENERATOR_ID.to_string(),
            config: *config,
            n_instances,
            indices,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub metric_id: String,
    pub replicate_values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single replicate.
    pub std: f64,
    pub std_denominator: String,
    pub config: BootstrapConfig,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

impl BootstrapSummary {
    fn from_values(metric_id: &str, replicate_values: Vec<f64>, config: BootstrapConfig) -> Self {
        let (mean, std) = mean_std(&replicate_values);
        Self {
            metric_id: metric_id.to_string(),
            replicate_values,
            mean,
            std,
            std_denominator: "n-1".to_string(),
            config,
        }
    }
}

/// Bootstraps `metric` over `instances` with a freshly generated schedule.
pub fn bootstrap<T, F>(
    instances: &[T],
    metric_id: &str,
    metric: F,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary, StatsError>
where
    T: Sync,
    F: Fn(&[&T]) -> f64 + Sync + Send,
{
    let schedule = ResampleSchedule::generate(instances.len(), config)?;
    bootstrap_on_schedule(instances, metric_id, metric, &schedule, Execution::available())
}

/// Evaluates `metric` on each replicate of an existing schedule.
///
/// Sequential and parallel execution produce bit-identical summaries.
pub fn bootstrap_on_schedule<T, F>(
    instances: &[T],
    metric_id: &str,
    metric: F,
    schedule: &ResampleSchedule,
    mode: Execution,
) -> Result<BootstrapSummary, StatsError>
where
    T: Sync,
    F: Fn(&[&T]) -> f64 + Sync + Send,
{
    if instances.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if schedule.n_instances != instances.len() {
        return Err(StatsError::ScheduleMismatch {
            expected: schedule.n_instances,
            actual: instances.len(),
        });
    }
    let values = par::map_with(mode, &schedule.indices, |idx| {
        let sample: Vec<&T> = idx.iter().map(|&i| &instances[i]).collect();
        metric(&sample)
    });
    Ok(BootstrapSummary::from_values(metric_id, values, schedule.config))
}
