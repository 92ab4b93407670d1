//! Benchmark conversion into screening and staging instruction records.
//!
//! Source tables (CSV or JSONL) are mapped through a [`DatasetSpec`] column
//! mapping. Each (record, condition) unit becomes exactly one instance or one
//! reject, so `instances + rejects == units` always holds.

mod prompts;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Execution};

pub use prompts::{
    build_screening_prompt, build_screening_prompt_named, build_staging_prompt, Condition, Modality, StagingDisease,
    SCREENING_INLINE_TEMPLATE, SCREENING_TEMPLATE, STAGING_DR_TEMPLATE, STAGING_MACULAR_HOLE_TEMPLATE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("unknown condition: {0:?}")]
    UnknownCondition(String),
    #[error("unsupported staging disease: {0:?}")]
    UnsupportedDisease(String),
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
    #[error("could not read source table: {0}")]
    Read(String),
    #[error("manifests for dataset {0:?} disagree on metadata")]
    ManifestConflict(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSchema {
    BinaryCondition,
    #[serde(rename = "stage_0_4")]
    Stage0To4,
    #[serde(rename = "stage_2_4")]
    Stage2To4,
}

impl LabelSchema {
    pub fn valid_stages(&self) -> Option<&'static [u8]> {
        match self {
            LabelSchema::BinaryCondition => None,
            LabelSchema::Stage0To4 => Some(&[0, 1, 2, 3, 4]),
            LabelSchema::Stage2To4 => Some(&[2, 3, 4]),
        }
    }

    fn default_disease(&self) -> Option<StagingDisease> {
        match self {
            LabelSchema::BinaryCondition => None,
            LabelSchema::Stage0To4 => Some(StagingDisease::Dr),
            LabelSchema::Stage2To4 => Some(StagingDisease::MacularHole),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryGold {
    #[serde(rename = "TRUE")]
    True,
    #[serde(rename = "FALSE")]
    False,
}

impl BinaryGold {
    pub fn as_bool(&self) -> bool {
        matches!(self, BinaryGold::True)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BinaryGold::True => "TRUE",
            BinaryGold::False => "FALSE",
        }
    }
}

impl From<bool> for BinaryGold {
    fn from(b: bool) -> Self {
        if b {
            BinaryGold::True
        } else {
            BinaryGold::False
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningInstance {
    pub instance_id: String,
    pub dataset: String,
    pub source_record: String,
    pub image_ref: String,
    pub condition: Condition,
    pub modality: Modality,
    pub prompt: String,
    pub gold: BinaryGold,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagingInstance {
    pub instance_id: String,
    pub dataset: String,
    pub source_record: String,
    pub image_ref: String,
    pub disease: StagingDisease,
    pub prompt: String,
    /// Set when the prompt is not a published one (macular hole).
    pub prompt_extrapolated: bool,
    pub gold: u8,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    LabelOutOfRange,
    MissingImageRef,
    UnparseableLabel,
    InvalidSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub dataset: String,
    pub source_record: String,
    /// Zero-based row in the source table.
    pub row: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub condition: Option<Condition>,
    pub reason: RejectReason,
    pub detail: String,
}

/// How the train/test split was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitProvenance {
    Source { column: String },
    Seeded { seed: u64, test_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub dataset_name: String,
    pub modality: Modality,
    pub population: String,
    pub license: String,
    /// Number of emitted instances.
    pub image_count: u64,
    pub label_schema: LabelSchema,
    /// Distinct image references among emitted instances.
    pub distinct_images: u64,
    pub source_records: u64,
    pub source_units: u64,
    pub rejected_count: u64,
    /// Gold label → count over emitted instances.
    pub label_histogram: BTreeMap<String, u64>,
    pub split_counts: BTreeMap<Split, u64>,
    pub split: SplitProvenance,
    pub prompt_extrapolated: bool,
}

/// Column mapping and metadata for one source table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub dataset_name: String,
    pub modality: Modality,
    #[serde(default)]
    pub population: String,
    #[serde(default)]
    pub license: String,
    pub label_schema: LabelSchema,
    pub image_column: String,
    #[serde(default)]
    pub id_column: Option<String>,
    #[serde(default)]
    pub split_column: Option<String>,
    /// Condition name → column holding its binary label (screening datasets).
    #[serde(default)]
    pub conditions: BTreeMap<String, String>,
    /// Column holding the stage (staging datasets).
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub disease: Option<StagingDisease>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

impl DatasetSpec {
    /// Screening spec with a single condition column.
    pub fn screening(name: &str, modality: Modality, image_column: &str, condition: Condition, column: &str) -> Self {
        let mut conditions = BTreeMap::new();
        conditions.insert(condition.display_name().to_string(), column.to_string());
        DatasetSpec {
            dataset_name: name.to_string(),
            modality,
            population: String::new(),
            license: String::new(),
            label_schema: LabelSchema::BinaryCondition,
            image_column: image_column.to_string(),
            id_column: None,
            split_column: None,
            conditions,
            label_column: None,
            disease: None,
            seed: 0,
            test_fraction: default_test_fraction(),
        }
    }

    /// Staging spec reading stages from `label_column`.
    pub fn staging(
        name: &str,
        modality: Modality,
        image_column: &str,
        schema: LabelSchema,
        label_column: &str,
    ) -> Self {
        DatasetSpec {
            dataset_name: name.to_string(),
            modality,
            population: String::new(),
            license: String::new(),
            label_schema: schema,
            image_column: image_column.to_string(),
            id_column: None,
            split_column: None,
            conditions: BTreeMap::new(),
            label_column: Some(label_column.to_string()),
            disease: schema.default_disease(),
            seed: 0,
            test_fraction: default_test_fraction(),
        }
    }

    /// Condition columns in canonical condition order.
    fn resolved_conditions(&self) -> Result<Vec<(Condition, String)>, SchemaError> {
        let mut resolved = BTreeMap::new();
        for (name, col) in &self.conditions {
            let condition = name.parse::<Condition>()?;
            if resolved.insert(condition, col.clone()).is_some() {
                return Err(SchemaError::InvalidSpec(format!("condition {condition} mapped twice")));
            }
        }
        Ok(resolved.into_iter().collect())
    }

    fn validate(&self) -> Result<(), SchemaError> {
        if self.dataset_name.trim().is_empty() {
            return Err(SchemaError::InvalidSpec("dataset_name is empty".into()));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(SchemaError::InvalidSpec(format!(
                "test_fraction {} not in [0, 1)",
                self.test_fraction
            )));
        }
        match self.label_schema {
            LabelSchema::BinaryCondition => {
                if self.conditions.is_empty() {
                    return Err(SchemaError::InvalidSpec(
                        "binary schema needs at least one condition column".into(),
                    ));
                }
            }
            schema => {
                if self.label_column.is_none() {
                    return Err(SchemaError::InvalidSpec("staging schema needs label_column".into()));
                }
                let disease = self.disease.or(schema.default_disease()).expect("staging schema");
                if Some(disease.valid_stages()) != schema.valid_stages() {
                    return Err(SchemaError::InvalidSpec(format!(
                        "disease {disease:?} does not match label schema {schema:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One source row: column name → cell text.
pub type SourceRecord = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub screening: Vec<ScreeningInstance>,
    pub staging: Vec<StagingInstance>,
    pub rejects: Vec<RejectRecord>,
    pub manifest: BenchmarkManifest,
}

impl Conversion {
    pub fn instance_count(&self) -> usize {
        self.screening.len() + self.staging.len()
    }
}

/// Parses a binary source label. Accepts 1/0, true/false, yes/no, positive/negative.
pub fn parse_binary_source_label(raw: &str) -> Option<bool> {
    match raw.trim().to_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" | "y" | "positive" | "t" => Some(true),
        "0" | "0.0" | "false" | "no" | "n" | "negative" | "f" => Some(false),
        _ => None,
    }
}

/// Parses a stage label as a non-negative integer (allowing a trailing ".0").
pub fn parse_stage_source_label(raw: &str) -> Option<i64> {
    let t = raw.trim();
    let t = t.strip_suffix(".0").unwrap_or(t);
    t.parse::<i64>().ok()
}

fn parse_split(raw: &str) -> Option<Split> {
    match raw.trim().to_lowercase().as_str() {
        "train" | "training" => Some(Split::Train),
        "test" | "testing" => Some(Split::Test),
        _ => None,
    }
}

/// Seeded split: shuffles row indices with ChaCha8 and assigns the first
/// `round(n * test_fraction)` rows to test.
pub fn seeded_split(n: usize, seed: u64, test_fraction: f64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut splits = vec![Split::Train; n];
    for &i in &order[..n_test.min(n)] {
        splits[i] = Split::Test;
    }
    splits
}

/// Converts one source table into instruction instances, rejects and a manifest.
pub fn convert_benchmark(records: &[SourceRecord], spec: &DatasetSpec) -> Result<Conversion, SchemaError> {
    spec.validate()?;
    let conditions = spec.resolved_conditions()?;
    let seeded = match spec.split_column {
        Some(_) => None,
        None => Some(seeded_split(records.len(), spec.seed, spec.test_fraction)),
    };
    let staging_disease = spec.disease.or(spec.label_schema.default_disease());

    let mut out = Conversion {
        screening: Vec::new(),
        staging: Vec::new(),
        rejects: Vec::new(),
        manifest: BenchmarkManifest {
            dataset_name: spec.dataset_name.clone(),
            modality: spec.modality,
            population: spec.population.clone(),
            license: spec.license.clone(),
            image_count: 0,
            label_schema: spec.label_schema,
            distinct_images: 0,
            source_records: records.len() as u64,
            source_units: 0,
            rejected_count: 0,
            label_histogram: BTreeMap::new(),
            split_counts: BTreeMap::new(),
            split: match &spec.split_column {
                Some(column) => SplitProvenance::Source { column: column.clone() },
                None => SplitProvenance::Seeded {
                    seed: spec.seed,
                    test_fraction: spec.test_fraction,
                },
            },
            prompt_extrapolated: staging_disease.is_some_and(|d| d.prompt_extrapolated()),
        },
    };

    // Prompts are constant per (condition, modality) / disease; build once.
    let screening_prompts: Vec<String> = conditions
        .iter()
        .map(|(c, _)| build_screening_prompt(*c, spec.modality))
        .collect();
    let staging_prompt = staging_disease.map(build_staging_prompt);
    let mut images = BTreeSet::new();

    for (row, record) in records.iter().enumerate() {
        let record_id = spec
            .id_column
            .as_ref()
            .and_then(|c| record.get(c))
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("row{row}"));
        let image_ref = record.get(&spec.image_column).map(|s| s.trim()).unwrap_or("");
        let split = match (&spec.split_column, &seeded) {
            (Some(col), _) => parse_split(record.get(col).map(String::as_str).unwrap_or("")).ok_or_else(|| {
                format!(
                    "split value {:?} is not train/test",
                    record.get(col).cloned().unwrap_or_default()
                )
            }),
            (None, Some(s)) => Ok(s[row]),
            (None, None) => unreachable!(),
        };
        let reject = |condition: Option<Condition>, reason: RejectReason, detail: String| RejectRecord {
            dataset: spec.dataset_name.clone(),
            source_record: record_id.clone(),
            row,
            condition,
            reason,
            detail,
        };

        match spec.label_schema {
            LabelSchema::BinaryCondition => {
                for ((condition, column), prompt) in conditions.iter().zip(&screening_prompts) {
                    out.manifest.source_units += 1;
                    let condition = *condition;
                    if image_ref.is_empty() {
                        out.rejects.push(reject(
                            Some(condition),
                            RejectReason::MissingImageRef,
                            spec.image_column.clone(),
                        ));
                        continue;
                    }
                    let split = match &split {
                        Ok(s) => *s,
                        Err(e) => {
                            out.rejects
                                .push(reject(Some(condition), RejectReason::InvalidSplit, e.clone()));
                            continue;
                        }
                    };
                    let raw = record.get(column).map(String::as_str).unwrap_or("");
                    let gold = match parse_binary_source_label(raw) {
                        Some(b) => BinaryGold::from(b),
                        None => {
                            out.rejects.push(reject(
                                Some(condition),
                                RejectReason::UnparseableLabel,
                                format!("{column}={raw:?}"),
                            ));
                            continue;
                        }
                    };
                    *out.manifest
                        .label_histogram
                        .entry(gold.as_str().to_string())
                        .or_default() += 1;
                    *out.manifest.split_counts.entry(split).or_default() += 1;
                    images.insert(image_ref.to_string());
                    out.screening.push(ScreeningInstance {
                        instance_id: format!("{}:{}:{}", spec.dataset_name, record_id, condition.key()),
                        dataset: spec.dataset_name.clone(),
                        source_record: record_id.clone(),
                        image_ref: image_ref.to_string(),
                        condition,
                        modality: spec.modality,
                        prompt: prompt.clone(),
                        gold,
                        split,
                    });
                }
            }
            schema => {
                out.manifest.source_units += 1;
                let disease = staging_disease.expect("validated");
                let valid = schema.valid_stages().expect("staging schema");
                if image_ref.is_empty() {
                    out.rejects
                        .push(reject(None, RejectReason::MissingImageRef, spec.image_column.clone()));
                    continue;
                }
                let split = match split {
                    Ok(s) => s,
                    Err(e) => {
                        out.rejects.push(reject(None, RejectReason::InvalidSplit, e));
                        continue;
                    }
                };
                let column = spec.label_column.as_ref().expect("validated");
                let raw = record.get(column).map(String::as_str).unwrap_or("");
                let stage = match parse_stage_source_label(raw) {
                    Some(s) => s,
                    None => {
                        out.rejects.push(reject(
                            None,
                            RejectReason::UnparseableLabel,
                            format!("{column}={raw:?}"),
                        ));
                        continue;
                    }
                };
                if stage < 0 || stage > u8::MAX as i64 || !valid.contains(&(stage as u8)) {
                    out.rejects.push(reject(
                        None,
                        RejectReason::LabelOutOfRange,
                        format!("stage {stage} not in {valid:?}"),
                    ));
                    continue;
                }
                let stage = stage as u8;
                *out.manifest.label_histogram.entry(stage.to_string()).or_default() += 1;
                *out.manifest.split_counts.entry(split).or_default() += 1;
                images.insert(image_ref.to_string());
                out.staging.push(StagingInstance {
                    instance_id: format!("{}:{}", spec.dataset_name, record_id),
                    dataset: spec.dataset_name.clone(),
                    source_record: record_id.clone(),
                    image_ref: image_ref.to_string(),
                    disease,
                    prompt: staging_prompt.clone().expect("staging prompt"),
                    prompt_extrapolated: disease.prompt_extrapolated(),
                    gold: stage,
                    split,
                });
            }
        }
    }

    out.manifest.image_count = out.instance_count() as u64;
    out.manifest.distinct_images = images.len() as u64;
    out.manifest.rejected_count = out.rejects.len() as u64;
    Ok(out)
}

/// Converts several datasets; datasets run in parallel, each one in order.
pub fn convert_many(
    jobs: &[(Vec<SourceRecord>, DatasetSpec)],
    mode: Execution,
) -> Vec<Result<Conversion, SchemaError>> {
    par::map_with(mode, jobs, |(records, spec)| convert_benchmark(records, spec))
}

/// Per-dataset manifests merged into one cohort summary.
///
/// Merging is associative and commutative: counts for the same dataset name
/// are summed and datasets are keyed by name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CohortManifest {
    pub datasets: BTreeMap<String, BenchmarkManifest>,
}

impl CohortManifest {
    pub fn from_manifests<'a>(manifests: impl IntoIterator<Item = &'a BenchmarkManifest>) -> Result<Self, SchemaError> {
        let mut cohort = CohortManifest::default();
        for m in manifests {
            cohort.add(m)?;
        }
        Ok(cohort)
    }

    pub fn add(&mut self, m: &BenchmarkManifest) -> Result<(), SchemaError> {
        match self.datasets.get_mut(&m.dataset_name) {
            None => {
                self.datasets.insert(m.dataset_name.clone(), m.clone());
            }
            Some(existing) => {
                if existing.modality != m.modality
                    || existing.label_schema != m.label_schema
                    || existing.population != m.population
                    || existing.license != m.license
                    || existing.split != m.split
                    || existing.prompt_extrapolated != m.prompt_extrapolated
                {
                    return Err(SchemaError::ManifestConflict(m.dataset_name.clone()));
                }
                existing.image_count += m.image_count;
                // Shards of one dataset are assumed to hold disjoint images.
                existing.distinct_images += m.distinct_images;
                existing.source_records += m.source_records;
                existing.source_units += m.source_units;
                existing.rejected_count += m.rejected_count;
                for (k, v) in &m.label_histogram {
                    *existing.label_histogram.entry(k.clone()).or_default() += v;
                }
                for (k, v) in &m.split_counts {
                    *existing.split_counts.entry(*k).or_default() += v;
                }
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: &CohortManifest) -> Result<Self, SchemaError> {
        for m in other.datasets.values() {
            self.add(m)?;
        }
        Ok(self)
    }

    pub fn total_images(&self) -> u64 {
        self.datasets.values().map(|m| m.image_count).sum()
    }
}

/// Reads a CSV table with a header row.
pub fn read_csv_records(text: &str) -> Result<Vec<SourceRecord>, SchemaError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| SchemaError::Read(e.to_string()))?.clone();
    reader
        .records()
        .map(|row| {
            let row = row.map_err(|e| SchemaError::Read(e.to_string()))?;
            Ok(headers
                .iter()
                .zip(row.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect())
        })
        .collect()
}

/// Reads a JSONL table of flat objects; non-string scalars are stringified.
pub fn read_jsonl_records(text: &str) -> Result<Vec<SourceRecord>, SchemaError> {
    let rows: Vec<BTreeMap<String, serde_json::Value>> =
        crate::jsonl::parse(text).map_err(|e| SchemaError::Read(e.to_string()))?;
    Ok(rows
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(k, v)| {
                    let s = match v {
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    };
                    (k, s)
                })
                .collect()
        })
        .collect())
}
