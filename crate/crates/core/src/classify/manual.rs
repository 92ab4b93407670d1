use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ClassifyError;

/// One rater's 1–5 scores for one model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaterScore {
    pub sample_id: String,
    pub model_id: String,
    pub rater_id: String,
    pub conciseness: u8,
    pub accuracy: u8,
    pub readability: u8,
}

impl RaterScore {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        for v in [self.conciseness, self.accuracy, self.readability] {
            if !(1..=5).contains(&v) {
                return Err(ClassifyError::RatingOutOfRange(v));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DimensionMeans {
    pub conciseness: f64,
    pub accuracy: f64,
    pub readability: f64,
}

impl DimensionMeans {
    /// The three means rendered with two decimals.
    pub fn display(&self) -> [String; 3] {
        [self.conciseness, self.accuracy, self.readability].map(|v| format!("{v:.2}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManualSummary {
    /// Mean over all raters and samples.
    pub overall: DimensionMeans,
    pub per_rater: BTreeMap<String, DimensionMeans>,
    pub n_scores: usize,
}

fn mean_of(scores: &[&RaterScore]) -> DimensionMeans {
    let n = scores.len() as f64;
    let avg = |f: fn(&RaterScore) -> u8| scores.iter().map(|s| f64::from(f(s))).sum::<f64>() / n;
    DimensionMeans {
        conciseness: avg(|s| s.conciseness),
        accuracy: avg(|s| s.accuracy),
        readability: avg(|s| s.readability),
    }
}

/// Per-model means over raters and samples.
pub fn aggregate_manual(scores: &[RaterScore]) -> Result<BTreeMap<String, ManualSummary>, ClassifyError> {
    if scores.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let mut by_model: BTreeMap<&str, Vec<&RaterScore>> = BTreeMap::new();
    for s in scores {
        s.validate()?;
        by_model.entry(&s.model_id).or_default().push(s);
    }
    Ok(by_model
        .into_iter()
        .map(|(model, rows)| {
            let mut by_rater: BTreeMap<&str, Vec<&RaterScore>> = BTreeMap::new();
            for r in &rows {
                by_rater.entry(&r.rater_id).or_default().push(r);
            }
            let summary = ManualSummary {
                overall: mean_of(&rows),
                per_rater: by_rater
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), mean_of(&v)))
                    .collect(),
                n_scores: rows.len(),
            };
            (model.to_string(), summary)
        })
        .collect())
}

/// Combines per-rater means (each over the same number of samples) into one
/// mean per dimension.
pub fn combine_rater_means(rater_means: &[DimensionMeans]) -> Result<DimensionMeans, ClassifyError> {
    if rater_means.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let n = rater_means.len() as f64;
    Ok(DimensionMeans {
        conciseness: rater_means.iter().map(|m| m.conciseness).sum::<f64>() / n,
        accuracy: rater_means.iter().map(|m| m.accuracy).sum::<f64>() / n,
        readability: rater_means.iter().map(|m| m.readability).sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(sample: &str, rater: &str, c: u8, a: u8, r: u8) -> RaterScore {
        RaterScore {
            sample_id: sample.into(),
            model_id: "m".into(),
            rater_id: rater.into(),
            conciseness: c,
            accuracy: a,
            readability: r,
        }
    }

    #[test]
    fn single_score() {
        let out = aggregate_manual(&[score("s1", "r1", 5, 5, 5)]).unwrap();
        assert_eq!(out["m"].overall.display(), ["5.00", "5.00", "5.00"]);
    }

    #[test]
    fn per_rater_and_overall() {
        let rows = vec![
            score("s1", "r1", 5, 3, 4),
            score("s2", "r1", 4, 3, 4),
            score("s1", "r2", 2, 1, 5),
            score("s2", "r2", 3, 2, 5),
        ];
        let out = aggregate_manual(&rows).unwrap();
        let m = &out["m"];
        assert_eq!(m.per_rater["r1"].conciseness, 4.5);
        assert_eq!(m.per_rater["r2"].conciseness, 2.5);
        assert_eq!(m.overall.conciseness, 3.5);
        assert_eq!(m.overall.accuracy, 2.25);
        assert_eq!(m.n_scores, 4);
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        assert_eq!(
            aggregate_manual(&[score("s", "r", 6, 1, 1)]).unwrap_err(),
            ClassifyError::RatingOutOfRange(6)
        );
        assert_eq!(aggregate_manual(&[]).unwrap_err(), ClassifyError::EmptyInput);
        assert_eq!(combine_rater_means(&[]).unwrap_err(), ClassifyError::EmptyInput);
    }
}
