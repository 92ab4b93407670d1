//! Training configuration documents for the three training stages.
//!
//! All stages share one hyperparameter table; per-stage overrides are possible
//! through [`TrainingConfig::for_stage`] callers but default to identical values.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub stage: u8,
    pub num_gpus: u32,
    pub per_device_batch: u32,
    pub grad_accum: u32,
    pub precision: String,
    pub zero_stage: u8,
    pub learning_rate: f64,
    pub scheduler: String,
    pub weight_decay: f64,
    pub warmup_ratio: f64,
    pub image_resolution: u32,
    pub max_dynamic_patches: u32,
    pub downsample_ratio: f64,
    pub drop_path_rate: f64,
    pub vision_select_layer: i32,
    pub freeze_backbone: bool,
    pub freeze_llm: bool,
    pub freeze_mlp: bool,
    pub max_seq_len: u32,
    pub gradient_checkpointing: bool,
    pub group_by_length: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainConfigError {
    #[error("stage must be 1, 2 or 3, got {0}")]
    InvalidStage(u8),
    #[error("unparseable document: {0}")]
    UnparseableDocument(String),
}

impl TrainingConfig {
    pub fn for_stage(stage: u8) -> Result<Self, TrainConfigError> {
        if !(1..=3).contains(&stage) {
            return Err(TrainConfigError::InvalidStage(stage));
        }
        Ok(Self {
            stage,
            num_gpus: 4,
            per_device_batch: 1,
            grad_accum: 1,
            precision: "bfloat16".into(),
            zero_stage: 1,
            learning_rate: 4e-5,
            scheduler: "cosine".into(),
            weight_decay: 0.01,
            warmup_ratio: 0.03,
            image_resolution: 448,
            max_dynamic_patches: 6,
            downsample_ratio: 0.5,
            drop_path_rate: 0.1,
            vision_select_layer: -1,
            freeze_backbone: true,
            freeze_llm: false,
            freeze_mlp: false,
            max_seq_len: 9000,
            gradient_checkpointing: true,
            group_by_length: true,
        })
    }
}

/// Canonical JSON document for `stage`: declaration key order, two-space
/// indent, trailing newline.
pub fn emit_training_config(stage: u8) -> Result<String, TrainConfigError> {
    let cfg = TrainingConfig::for_stage(stage)?;
    let mut s = serde_json::to_string_pretty(&cfg).expect("config serializes");
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDiff {
    pub field: String,
    pub expected: Value,
    pub actual: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigVerdict {
    pub ok: bool,
    pub diffs: Vec<FieldDiff>,
    /// Violated invariants, e.g. an unfrozen vision encoder.
    pub invariant_violations: Vec<String>,
}

/// Compares a document against the reference table for its recorded stage.
///
/// Unknown keys are reported as diffs with `expected = null`.
pub fn validate_training_config(document: &str) -> Result<ConfigVerdict, TrainConfigError> {
    let doc: Value =
        serde_json::from_str(document).map_err(|e| TrainConfigError::UnparseableDocument(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| TrainConfigError::UnparseableDocument("not a JSON object".into()))?;
    let stage = obj
        .get("stage")
        .and_then(Value::as_u64)
        .filter(|s| (1..=3).contains(s))
        .unwrap_or(1) as u8;
    let expected = serde_json::to_value(TrainingConfig::for_stage(stage).expect("valid stage")).expect("serializes");
    let expected = expected.as_object().expect("object");

    let mut diffs = Vec::new();
    for (k, ev) in expected {
        let av = obj.get(k).cloned().unwrap_or(Value::Null);
        if !json_eq(ev, &av) {
            diffs.push(FieldDiff {
                field: k.clone(),
                expected: ev.clone(),
                actual: av,
            });
        }
    }
    for (k, av) in obj {
        if !expected.contains_key(k) {
            diffs.push(FieldDiff {
                field: k.clone(),
                expected: Value::Null,
                actual: av.clone(),
            });
        }
    }

    let mut invariant_violations = Vec::new();
    if obj.get("freeze_backbone") != Some(&Value::Bool(true)) {
        invariant_violations.push("vision encoder must stay frozen (freeze_backbone = true)".to_string());
    }
    for key in ["freeze_llm", "freeze_mlp"] {
        if obj.get(key) != Some(&Value::Bool(false)) {
            invariant_violations.push(format!("{key} must be false"));
        }
    }
    match obj.get("learning_rate").and_then(Value::as_f64) {
        Some(lr) if lr > 0.0 => {}
        _ => invariant_violations.push("learning_rate must be positive".to_string()),
    }
    match obj.get("warmup_ratio").and_then(Value::as_f64) {
        Some(w) if (0.0..1.0).contains(&w) => {}
        _ => invariant_violations.push("warmup_ratio must be in [0, 1)".to_string()),
    }

    Ok(ConfigVerdict {
        ok: diffs.is_empty() && invariant_violations.is_empty(),
        diffs,
        invariant_violations,
    })
}

fn json_eq(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if a.is_number() && b.is_number() => x == y,
        _ => a == b,
    }
}
