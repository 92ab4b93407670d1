//! Classification scoring: label parsing from free text, confusion counts,
//! precision/recall/specificity/F1, per-stage one-vs-rest grading, macro
//! averages over conditions, and manual rating aggregation.

mod labels;
mod manual;
mod scores;

pub use labels::{parse_binary_label, parse_stage_label, LabelValue, ParsedLabel};
pub use manual::{aggregate_manual, combine_rater_means, DimensionMeans, ManualSummary, RaterScore};
pub use scores::{
    macro_over_conditions, score_binary, score_stages, BinaryReport, ClassificationScores, ConfusionCounts, F1Field,
    StageEntry, StageScores,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("{0} gold labels but {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("no instances to score")]
    EmptyInput,
    #[error("gold stage {0} is not in the valid stage set")]
    GoldOutOfRange(u8),
    #[error("rating {0} is outside 1..=5")]
    RatingOutOfRange(u8),
}
