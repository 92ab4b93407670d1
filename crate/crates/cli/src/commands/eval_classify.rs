use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use volmo_core::classify::{
    aggregate_manual, macro_over_conditions, parse_binary_label, parse_stage_label, score_binary, score_stages,
    BinaryReport, ClassificationScores, F1Field, ParsedLabel, RaterScore, StageScores,
};
use volmo_core::schema::{ScreeningInstance, StagingInstance};

use super::parse_jsonl;
use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

#[derive(Args, Debug)]
pub struct EvalClassifyArgs {
    /// predictions.jsonl of {instance_id, model_id, raw_output}.
    #[arg(long)]
    input: PathBuf,
    /// Instance files written by `convert` (screening and/or staging).
    #[arg(long, required = true, num_args = 1..)]
    instances: Vec<PathBuf>,
    /// Optional manual ratings JSONL of {sample_id, model_id, rater_id, conciseness, accuracy, readability}.
    #[arg(long)]
    ratings: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct Prediction {
    instance_id: String,
    model_id: String,
    raw_output: String,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AnyInstance {
    Screening(ScreeningInstance),
    Staging(StagingInstance),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Binary(bool),
    Stage(u8),
}

/// One parsed prediction joined to its gold label; the input to `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub instance_id: String,
    pub model_id: String,
    /// `screening/<condition>` or `staging/<disease>`.
    pub group: String,
    pub gold: Gold,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_stages: Option<Vec<u8>>,
    pub parsed: ParsedLabel,
}

/// Classification metric selectable for comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassMetric {
    Precision,
    Sensitivity,
    Specificity,
    F1,
    ClassMacroF1,
}

impl ClassMetric {
    pub const DEFAULT: [ClassMetric; 3] = [ClassMetric::F1, ClassMetric::Sensitivity, ClassMetric::Specificity];

    pub fn parse(s: &str) -> Option<ClassMetric> {
        Some(match s {
            "precision" => ClassMetric::Precision,
            "sensitivity" | "recall" => ClassMetric::Sensitivity,
            "specificity" => ClassMetric::Specificity,
            "f1" => ClassMetric::F1,
            "class_macro_f1" => ClassMetric::ClassMacroF1,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassMetric::Precision => "precision",
            ClassMetric::Sensitivity => "sensitivity",
            ClassMetric::Specificity => "specificity",
            ClassMetric::F1 => "f1",
            ClassMetric::ClassMacroF1 => "class_macro_f1",
        }
    }

    pub fn pick(&self, s: &ClassificationScores) -> f64 {
        match self {
            ClassMetric::Precision => s.precision,
            ClassMetric::Sensitivity => s.recall,
            ClassMetric::Specificity => s.specificity,
            ClassMetric::F1 => s.f1,
            ClassMetric::ClassMacroF1 => s.class_macro_f1,
        }
    }
}

/// Scores a set of records from one group; `None` when the group mixes label kinds.
pub fn group_scores(records: &[&LabelRecord]) -> Option<ClassificationScores> {
    let preds: Vec<ParsedLabel> = records.iter().map(|r| r.parsed.clone()).collect();
    match records.first()?.gold {
        Gold::Binary(_) => {
            let golds: Option<Vec<bool>> = records
                .iter()
                .map(|r| if let Gold::Binary(b) = r.gold { Some(b) } else { None })
                .collect();
            score_binary(&golds?, &preds).ok().map(|r| r.scores)
        }
        Gold::Stage(_) => {
            let golds: Option<Vec<u8>> = records
                .iter()
                .map(|r| if let Gold::Stage(s) = r.gold { Some(s) } else { None })
                .collect();
            let valid: BTreeSet<u8> = records[0].valid_stages.clone()?.into_iter().collect();
            score_stages(&golds?, &preds, &valid).ok().map(|s| s.overall)
        }
    }
}

#[derive(Serialize, Default)]
struct ModelScores {
    predictions: usize,
    screening: BTreeMap<String, BinaryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    macro_f1_positive_class: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    macro_f1_class_macro: Option<f64>,
    staging: BTreeMap<String, StageScores>,
    invalid_rate: f64,
}

pub fn run(ctx: &Context, args: EvalClassifyArgs) -> CliResult<()> {
    let mut run = Run::start(
        "eval-classify",
        &ctx.out_dir,
        serde_json::json!({
            "invalid_binary": "counted as the label opposite the gold",
            "invalid_stage": "counted as a reserved non-stage",
            "zero_denominator": 0.0,
        }),
    )?;

    let mut instances: HashMap<String, AnyInstance> = HashMap::new();
    for path in &args.instances {
        let text = run.read_input(path)?;
        for inst in parse_jsonl::<AnyInstance>(path, &text)? {
            let id = match &inst {
                AnyInstance::Screening(s) => s.instance_id.clone(),
                AnyInstance::Staging(s) => s.instance_id.clone(),
            };
            if instances.insert(id.clone(), inst).is_some() {
                return Err(CliError::Input(format!("duplicate instance id {id}")));
            }
        }
    }
    let text = run.read_input(&args.input)?;
    let predictions: Vec<Prediction> = parse_jsonl(&args.input, &text)?;

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(predictions.len());
    for p in &predictions {
        if !seen.insert((p.model_id.clone(), p.instance_id.clone())) {
            return Err(CliError::Input(format!(
                "duplicate prediction for {} by {}",
                p.instance_id, p.model_id
            )));
        }
        let inst = instances
            .get(&p.instance_id)
            .ok_or_else(|| CliError::Input(format!("prediction for unknown instance {}", p.instance_id)))?;
        records.push(match inst {
            AnyInstance::Screening(s) => LabelRecord {
                instance_id: p.instance_id.clone(),
                model_id: p.model_id.clone(),
                group: format!("screening/{}", s.condition.key()),
                gold: Gold::Binary(s.gold.as_bool()),
                valid_stages: None,
                parsed: parse_binary_label(&p.raw_output),
            },
            AnyInstance::Staging(s) => {
                let valid: BTreeSet<u8> = s.disease.valid_stages().iter().copied().collect();
                LabelRecord {
                    instance_id: p.instance_id.clone(),
                    model_id: p.model_id.clone(),
                    group: format!(
                        "staging/{}",
                        serde_json::to_value(s.disease).expect("disease").as_str().unwrap_or("")
                    ),
                    gold: Gold::Stage(s.gold),
                    valid_stages: Some(valid.iter().copied().collect()),
                    parsed: parse_stage_label(&p.raw_output, &valid),
                }
            }
        });
    }

    let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<&LabelRecord>>> = BTreeMap::new();
    for r in &records {
        grouped
            .entry(&r.model_id)
            .or_default()
            .entry(&r.group)
            .or_default()
            .push(r);
    }
    let mut models: BTreeMap<String, ModelScores> = BTreeMap::new();
    for (model, groups) in &grouped {
        let mut ms = ModelScores::default();
        let mut invalid = 0usize;
        for (group, recs) in groups {
            ms.predictions += recs.len();
            invalid += recs.iter().filter(|r| r.parsed.is_invalid()).count();
            let preds: Vec<ParsedLabel> = recs.iter().map(|r| r.parsed.clone()).collect();
            if let Some(cond) = group.strip_prefix("screening/") {
                let golds: Vec<bool> = recs.iter().map(|r| matches!(r.gold, Gold::Binary(true))).collect();
                let report = score_binary(&golds, &preds).map_err(|e| CliError::Input(format!("{group}: {e}")))?;
                ms.screening.insert(cond.to_string(), report);
            } else if let Some(disease) = group.strip_prefix("staging/") {
                let golds: Vec<u8> = recs
                    .iter()
                    .map(|r| if let Gold::Stage(s) = r.gold { s } else { 0 })
                    .collect();
                let valid: BTreeSet<u8> = recs[0].valid_stages.clone().unwrap_or_default().into_iter().collect();
                let scores =
                    score_stages(&golds, &preds, &valid).map_err(|e| CliError::Input(format!("{group}: {e}")))?;
                ms.staging.insert(disease.to_string(), scores);
            }
        }
        if !ms.screening.is_empty() {
            let per: BTreeMap<&String, ClassificationScores> =
                ms.screening.iter().map(|(k, v)| (k, v.scores)).collect();
            ms.macro_f1_positive_class = macro_over_conditions(&per, F1Field::PositiveClass).ok();
            ms.macro_f1_class_macro = macro_over_conditions(&per, F1Field::ClassMacro).ok();
        }
        ms.invalid_rate = invalid as f64 / ms.predictions.max(1) as f64;
        models.insert(model.to_string(), ms);
    }

    let manual = match &args.ratings {
        Some(path) => {
            let text = run.read_input(path)?;
            let ratings: Vec<RaterScore> = parse_jsonl(path, &text)?;
            let summaries = aggregate_manual(&ratings).map_err(|e| CliError::input(path.display(), e))?;
            // Means are reported to two decimals alongside the raw values.
            let with_display: BTreeMap<String, serde_json::Value> = summaries
                .into_iter()
                .map(|(model, s)| {
                    let [c, a, r] = s.overall.display();
                    let mut v = serde_json::to_value(&s).expect("summary");
                    v["display"] = serde_json::json!({ "conciseness": c, "accuracy": a, "readability": r });
                    (model, v)
                })
                .collect();
            Some(with_display)
        }
        None => None,
    };

    run.write_jsonl("instance_labels.jsonl", &records)?;
    run.write_json(
        "scores.json",
        &serde_json::json!({
            "instances": instances.len(),
            "models": models,
            "manual": manual,
        }),
    )?;
    run.finish()?;
    Ok(())
}
