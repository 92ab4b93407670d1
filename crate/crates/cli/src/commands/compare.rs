use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use volmo_core::par::Execution;
use volmo_core::rng::GENERATOR_ID;
use volmo_core::stats::{compare_paired, BootstrapConfig, Comparison, MetricScale, ResampleSchedule, ResampleUnit};
use volmo_core::text::ScoredPair;

use super::eval_classify::{group_scores, ClassMetric, LabelRecord};
use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::{BootstrapFlags, Context};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// `pair_scores.jsonl` from eval-text or `instance_labels.jsonl` from eval-classify.
    #[arg(long)]
    input: PathBuf,
    /// Model under test.
    #[arg(long)]
    model: String,
    /// Reference model.
    #[arg(long)]
    baseline: String,
    /// Metrics to compare (default: all text metrics, or f1/sensitivity/specificity).
    #[arg(long = "metric")]
    metrics: Vec<String>,
    #[command(flatten)]
    bootstrap: BootstrapFlags,
    /// Run replicates on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Serialize)]
struct Skipped {
    metric_id: String,
    reason: String,
}

#[derive(Serialize)]
struct ComparisonFile {
    generator: &'static str,
    model: String,
    baseline: String,
    bootstrap: BootstrapConfig,
    std_denominator: &'static str,
    instances: BTreeMap<String, usize>,
    comparisons: Vec<Comparison>,
    skipped: Vec<Skipped>,
}

enum Records {
    Text(Vec<ScoredPair>),
    Labels(Vec<LabelRecord>),
}

fn load(path: &std::path::Path, text: &str) -> CliResult<Records> {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let probe: serde_json::Value = serde_json::from_str(first).map_err(|e| CliError::input(path.display(), e))?;
    if probe.get("scores").is_some() {
        Ok(Records::Text(super::parse_jsonl(path, text)?))
    } else if probe.get("parsed").is_some() {
        Ok(Records::Labels(super::parse_jsonl(path, text)?))
    } else {
        Err(CliError::Input(format!(
            "{}: neither scored pairs nor label records",
            path.display()
        )))
    }
}

/// Splits items of the two models into id-aligned vectors. Both models must
/// cover the same ids.
fn pair_up<'a, T>(
    items: &'a [T],
    model: &str,
    baseline: &str,
    model_of: impl Fn(&T) -> &str,
    id_of: impl Fn(&T) -> &str,
) -> CliResult<(Vec<&'a T>, Vec<&'a T>)> {
    let mut a: BTreeMap<&str, &T> = BTreeMap::new();
    let mut b: BTreeMap<&str, &T> = BTreeMap::new();
    for it in items {
        let target = if model_of(it) == model {
            &mut a
        } else if model_of(it) == baseline {
            &mut b
        } else {
            continue;
        };
        if target.insert(id_of(it), it).is_some() {
            return Err(CliError::Input(format!(
                "duplicate record {} for {}",
                id_of(it),
                model_of(it)
            )));
        }
    }
    if a.is_empty() || b.is_empty() {
        return Err(CliError::Input(format!(
            "no records for {}",
            if a.is_empty() { model } else { baseline }
        )));
    }
    let ka: BTreeSet<&str> = a.keys().copied().collect();
    let kb: BTreeSet<&str> = b.keys().copied().collect();
    if ka != kb {
        let missing = ka.symmetric_difference(&kb).next().copied().unwrap_or_default();
        return Err(CliError::Input(format!(
            "models cover different instances ({} vs {}), e.g. {missing}",
            ka.len(),
            kb.len()
        )));
    }
    Ok((a.into_values().collect(), b.into_values().collect()))
}

pub fn run(ctx: &Context, args: CompareArgs) -> CliResult<()> {
    let file = &ctx.file;
    let defaults = BootstrapConfig::default();
    let config = BootstrapConfig {
        sample_size: args
            .bootstrap
            .sample_size
            .or(file.sample_size)
            .unwrap_or(defaults.sample_size),
        repeats: args.bootstrap.repeats.or(file.repeats).unwrap_or(defaults.repeats),
        seed: args.bootstrap.seed.or(file.seed).unwrap_or(defaults.seed),
        unit: ResampleUnit::Instance,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if args.model == args.baseline {
        return Err(CliError::Usage("--model and --baseline must differ".into()));
    }
    let mode = if args.sequential {
        Execution::Sequential
    } else {
        Execution::available()
    };

    let snapshot = serde_json::json!({
        "model": args.model,
        "baseline": args.baseline,
        "metrics": args.metrics,
        "bootstrap": config,
        "generator": GENERATOR_ID,
    });
    let mut run = Run::start("compare", &ctx.out_dir, snapshot)?;
    let text = run.read_input(&args.input)?;
    let records = load(&args.input, &text)?;

    let mut out = ComparisonFile {
        generator: GENERATOR_ID,
        model: args.model.clone(),
        baseline: args.baseline.clone(),
        bootstrap: config,
        std_denominator: "n-1",
        instances: BTreeMap::new(),
        comparisons: Vec::new(),
        skipped: Vec::new(),
    };
    let mut record = |metric_id: String, result: Result<Comparison, volmo_core::stats::StatsError>| match result {
        Ok(c) => out.comparisons.push(c),
        Err(e) => out.skipped.push(Skipped {
            metric_id,
            reason: e.to_string(),
        }),
    };

    match records {
        Records::Text(pairs) => {
            let (a, b) = pair_up(
                &pairs,
                &args.model,
                &args.baseline,
                |p| p.model_id.as_deref().unwrap_or(""),
                |p| p.id.as_str(),
            )?;
            let available: Vec<String> = a[0].scores.values().into_keys().collect();
            let metrics = if args.metrics.is_empty() {
                available.clone()
            } else {
                args.metrics.clone()
            };
            if let Some(m) = metrics.iter().find(|m| !available.contains(m)) {
                return Err(CliError::Usage(format!(
                    "unknown text metric {m:?}; expected one of {available:?}"
                )));
            }
            let va: Vec<BTreeMap<String, f64>> = a.iter().map(|p| p.scores.values()).collect();
            let vb: Vec<BTreeMap<String, f64>> = b.iter().map(|p| p.scores.values()).collect();
            let schedule = ResampleSchedule::generate(va.len(), &config).map_err(|e| CliError::Usage(e.to_string()))?;
            out.instances.insert("text".into(), va.len());
            for m in &metrics {
                let metric =
                    |sample: &[&BTreeMap<String, f64>]| sample.iter().map(|v| v[m]).sum::<f64>() / sample.len() as f64;
                let result = compare_paired(
                    (&args.model, &va),
                    (&args.baseline, &vb),
                    m,
                    metric,
                    &schedule,
                    MetricScale::Fraction,
                    mode,
                );
                record(m.clone(), result);
            }
        }
        Records::Labels(labels) => {
            let metrics: Vec<ClassMetric> = if args.metrics.is_empty() {
                ClassMetric::DEFAULT.to_vec()
            } else {
                args.metrics
                    .iter()
                    .map(|m| {
                        ClassMetric::parse(m)
                            .ok_or_else(|| CliError::Usage(format!("unknown classification metric {m:?}")))
                    })
                    .collect::<CliResult<_>>()?
            };
            let groups: BTreeSet<&str> = labels.iter().map(|l| l.group.as_str()).collect();
            for group in groups {
                let in_group: Vec<LabelRecord> = labels.iter().filter(|l| l.group == group).cloned().collect();
                let (a, b) = pair_up(
                    &in_group,
                    &args.model,
                    &args.baseline,
                    |l| l.model_id.as_str(),
                    |l| l.instance_id.as_str(),
                )?;
                let a: Vec<LabelRecord> = a.into_iter().cloned().collect();
                let b: Vec<LabelRecord> = b.into_iter().cloned().collect();
                let schedule =
                    ResampleSchedule::generate(a.len(), &config).map_err(|e| CliError::Usage(e.to_string()))?;
                out.instances.insert(group.to_string(), a.len());
                for m in &metrics {
                    let metric =
                        |sample: &[&LabelRecord]| group_scores(sample).map(|s| 100.0 * m.pick(&s)).unwrap_or(f64::NAN);
                    let metric_id = format!("{group}/{}", m.name());
                    let result = compare_paired(
                        (&args.model, &a),
                        (&args.baseline, &b),
                        &metric_id,
                        metric,
                        &schedule,
                        MetricScale::Percentage,
                        mode,
                    );
                    record(metric_id, result);
                }
            }
        }
    }

    run.write_json("comparison.json", &out)?;
    run.finish()?;
    Ok(())
}
