use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{ClassifyError, LabelValue, ParsedLabel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Adds one observation with the given gold and predicted positivity.
    pub fn record(&mut self, gold: bool, pred: bool) {
        match (gold, pred) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// The same counts with the positive class swapped.
    pub fn flipped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    /// Scores with the zero-denominator convention: any ratio over 0 is 0.
    pub fn scores(&self) -> ClassificationScores {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let specificity = ratio(self.tn, self.tn + self.fp);
        let positive = f1(precision, recall);
        let neg_precision = ratio(self.tn, self.tn + self.fn_);
        let negative = f1(neg_precision, specificity);
        ClassificationScores {
            precision,
            recall,
            specificity,
            f1: positive,
            positive_class_f1: positive,
            class_macro_f1: (positive + negative) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub precision: f64,
    /// Sensitivity.
    pub recall: f64,
    pub specificity: f64,
    /// Headline F1; equals `positive_class_f1`.
    pub f1: f64,
    pub positive_class_f1: f64,
    /// Mean of the positive-class and negative-class F1.
    pub class_macro_f1: f64,
}

impl ClassificationScores {
    fn mean(items: &[ClassificationScores]) -> Self {
        let n = items.len().max(1) as f64;
        let avg = |f: fn(&ClassificationScores) -> f64| items.iter().map(f).sum::<f64>() / n;
        Self {
            precision: avg(|s| s.precision),
            recall: avg(|s| s.recall),
            specificity: avg(|s| s.specificity),
            f1: avg(|s| s.f1),
            positive_class_f1: avg(|s| s.positive_class_f1),
            class_macro_f1: avg(|s| s.class_macro_f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryReport {
    pub counts: ConfusionCounts,
    pub scores: ClassificationScores,
    pub invalid_rate: f64,
}

/// Scores binary predictions. Unparseable predictions count as the class
/// opposite to the gold label.
pub fn score_binary(golds: &[bool], preds: &[ParsedLabel]) -> Result<BinaryReport, ClassifyError> {
    if golds.len() != preds.len() {
        return Err(ClassifyError::LengthMismatch(golds.len(), preds.len()));
    }
    if golds.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let mut counts = ConfusionCounts::default();
    let mut invalid = 0usize;
    for (&gold, pred) in golds.iter().zip(preds) {
        let p = match pred.value {
            LabelValue::Binary(b) => b,
            _ => {
                invalid += 1;
                !gold
            }
        };
        counts.record(gold, p);
    }
    Ok(BinaryReport {
        counts,
        scores: counts.scores(),
        invalid_rate: invalid as f64 / golds.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub counts: ConfusionCounts,
    pub scores: ClassificationScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    /// One-vs-rest scores for every stage with at least one gold instance.
    pub per_stage: BTreeMap<u8, StageEntry>,
    /// Macro mean over `per_stage`.
    pub overall: ClassificationScores,
    pub invalid_rate: f64,
}

/// Per-stage one-vs-rest scoring. Unparseable predictions never match any stage.
pub fn score_stages(
    golds: &[u8],
    preds: &[ParsedLabel],
    valid_stages: &BTreeSet<u8>,
) -> Result<StageScores, ClassifyError> {
    if golds.len() != preds.len() {
        return Err(ClassifyError::LengthMismatch(golds.len(), preds.len()));
    }
    if golds.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    if let Some(&g) = golds.iter().find(|g| !valid_stages.contains(g)) {
        return Err(ClassifyError::GoldOutOfRange(g));
    }
    let predicted: Vec<Option<u8>> = preds
        .iter()
        .map(|p| p.stage().filter(|s| valid_stages.contains(s)))
        .collect();
    let present: BTreeSet<u8> = golds.iter().copied().collect();
    let per_stage: BTreeMap<u8, StageEntry> = present
        .iter()
        .map(|&s| {
            let mut counts = ConfusionCounts::default();
            for (&g, &p) in golds.iter().zip(&predicted) {
                counts.record(g == s, p == Some(s));
            }
            (
                s,
                StageEntry {
                    counts,
                    scores: counts.scores(),
                },
            )
        })
        .collect();
    let all: Vec<ClassificationScores> = per_stage.values().map(|e| e.scores).collect();
    let invalid = predicted.iter().filter(|p| p.is_none()).count();
    Ok(StageScores {
        overall: ClassificationScores::mean(&all),
        per_stage,
        invalid_rate: invalid as f64 / golds.len() as f64,
    })
}

/// Which F1 to average across conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Field {
    #[default]
    PositiveClass,
    ClassMacro,
}

/// Unweighted mean of the selected F1 over conditions.
pub fn macro_over_conditions<K>(
    per_condition: &BTreeMap<K, ClassificationScores>,
    field: F1Field,
) -> Result<f64, ClassifyError> {
    if per_condition.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let sum: f64 = per_condition
        .values()
        .map(|s| match field {
            F1Field::PositiveClass => s.positive_class_f1,
            F1Field::ClassMacro => s.class_macro_f1,
        })
        .sum();
    Ok(sum / per_condition.len() as f64)
}
