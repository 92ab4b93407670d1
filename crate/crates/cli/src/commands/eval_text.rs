use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use volmo_core::text::embed::{EmbeddingProvider, HttpProvider, OneHotProvider, PrecomputedProvider};
use volmo_core::text::{score_corpus, FailureKind, ScoreConfig, TextPair, TokenPolicy};

use super::parse_jsonl;
use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

pub const ENV_EMBED_URL: &str = "VOLMO_EMBED_URL";

#[derive(Args, Debug)]
pub struct EvalTextArgs {
    /// JSONL of {id, model_id?, candidate, reference}.
    #[arg(long)]
    input: PathBuf,
    /// Tokenization policy: default or whitespace.
    #[arg(long)]
    policy: Option<String>,
    /// ROUGE-L recall weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Embedding source: `one-hot`, `precomputed:<file.jsonl>`, `http` (uses
    /// VOLMO_EMBED_URL) or `http:<base-url>`.
    #[arg(long)]
    provider: Option<String>,
    /// Model name requested from the embedding service.
    #[arg(long, default_value = "default")]
    embed_model: String,
}

pub fn run(ctx: &Context, args: EvalTextArgs) -> CliResult<()> {
    let file = &ctx.file;
    let policy_name = args
        .policy
        .clone()
        .or_else(|| file.policy.clone())
        .unwrap_or_else(|| "default".into());
    let policy: TokenPolicy = policy_name
        .parse()
        .map_err(|e: volmo_core::text::MetricError| CliError::Usage(e.to_string()))?;
    let beta = args.beta.or(file.beta).unwrap_or(1.0);
    if beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
        return Err(CliError::Usage("--beta must be positive".into()));
    }
    let provider_spec = args
        .provider
        .clone()
        .or_else(|| file.provider.clone())
        .unwrap_or_else(|| "one-hot".into());

    let snapshot = serde_json::json!({
        "policy": policy.id(),
        "beta": beta,
        "provider": provider_spec,
        "embed_model": args.embed_model,
    });
    let mut run = Run::start("eval-text", &ctx.out_dir, snapshot)?;

    let provider: Box<dyn EmbeddingProvider> = match provider_spec.as_str() {
        "one-hot" => Box::new(OneHotProvider::new(policy)),
        s if s.starts_with("precomputed:") => {
            let path = file.resolve(std::path::Path::new(&s["precomputed:".len()..]));
            let text = run.read_input(&path)?;
            Box::new(PrecomputedProvider::from_jsonl(&text).map_err(|e| CliError::input(path.display(), e))?)
        }
        s if s == "http" || s.starts_with("http:") || s.starts_with("http://") || s.starts_with("https://") => {
            let url = match s {
                "http" => std::env::var(ENV_EMBED_URL)
                    .map_err(|_| CliError::Usage(format!("provider `http` needs {ENV_EMBED_URL}")))?,
                s if s.starts_with("http:") && !s.starts_with("http://") => s["http:".len()..].to_string(),
                s => s.to_string(),
            };
            Box::new(HttpProvider::new(url, args.embed_model.clone()))
        }
        other => return Err(CliError::Usage(format!("unknown embedding provider {other:?}"))),
    };

    let text = run.read_input(&args.input)?;
    let pairs: Vec<TextPair> = parse_jsonl(&args.input, &text)?;
    let config = ScoreConfig { policy, beta };
    let scores = score_corpus(&pairs, provider.as_ref(), &config);
    if let Some(f) = scores.failures.iter().find(|f| f.kind == FailureKind::Service) {
        return Err(CliError::External(format!("pair {}: {}", f.id, f.error)));
    }

    // Means per model (pairs without a model id are grouped under "").
    let mut by_model: BTreeMap<String, volmo_core::text::CorpusScores> = BTreeMap::new();
    for s in &scores.scored {
        by_model
            .entry(s.model_id.clone().unwrap_or_default())
            .or_default()
            .scored
            .push(s.clone());
    }
    let means: BTreeMap<String, BTreeMap<String, f64>> = by_model.iter().map(|(m, c)| (m.clone(), c.means())).collect();

    run.write_jsonl("pair_scores.jsonl", &scores.scored)?;
    run.write_json(
        "text_scores.json",
        &serde_json::json!({
            "policy": policy.id(),
            "beta": beta,
            "embedding_model": provider.model_id(),
            "pairs": pairs.len(),
            "scored": scores.scored.len(),
            "means": means,
            "failures": scores.failures,
        }),
    )?;
    run.finish()?;
    Ok(())
}
