//! Data curation and evaluation toolkit for ophthalmology multimodal models.
//!
//! The crate is organised as one module per pipeline stage:
//!
//! - [`jats`]: JATS full-text parsing, figure/caption extraction, caption artifact scanning.
//! - [`caption`]: caption revision prompts, chat-completion client, offline cleaner.
//! - [`schema`]: benchmark conversion into screening and staging instruction records.
//! - [`dialogue`]: clinical profiles, profile rendering and five-turn dialogue synthesis.
//! - [`text`]: BLEU, ROUGE-L, BERTScore and SBERT similarity.
//! - [`classify`]: label parsing, confusion counts, per-stage and macro scores, manual ratings.
//! - [`stats`]: paired bootstrap, Wilcoxon signed-rank test, report formatting.
//! - [`train`]: training configuration emission and validation.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and plain iterators otherwise. Both paths produce identical
//! results.

pub mod caption;
pub mod classify;
pub mod dialogue;
pub mod jats;
pub mod jsonl;
pub mod par;
pub mod rng;
pub mod schema;
pub mod stats;
pub mod template;
pub mod text;
pub mod train;

/// Tool version recorded in run manifests and output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
