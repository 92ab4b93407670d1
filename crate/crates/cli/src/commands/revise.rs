use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use volmo_core::caption::{
    revise_corpus, CaptionError, ChatProvider, HttpChatProvider, ProviderConfig, ENV_KEY, ENV_URL,
};
use volmo_core::jats::FigurePair;

use super::parse_jsonl;
use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

#[derive(Args, Debug)]
pub struct ReviseArgs {
    /// figures.jsonl produced by `extract`.
    #[arg(long)]
    input: PathBuf,
    /// Chat-completions endpoint URL (falls back to VOLMO_LLM_URL).
    #[arg(long)]
    provider: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Skip the endpoint and apply only the offline cleaner.
    #[arg(long)]
    offline: bool,
    /// Fail instead of falling back to the offline cleaner.
    #[arg(long)]
    no_fallback: bool,
    #[arg(long)]
    max_attempts: Option<u32>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    timeout_secs: Option<f64>,
    /// Initial retry delay in seconds (doubles per retry, capped at 30 s).
    #[arg(long)]
    backoff_secs: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
}

pub fn run(ctx: &Context, args: ReviseArgs) -> CliResult<()> {
    let file = &ctx.file;
    let offline = args.offline || file.offline.unwrap_or(false);
    let defaults = ProviderConfig::default();
    let config = ProviderConfig {
        endpoint_url: args
            .provider
            .clone()
            .or_else(|| file.provider.clone())
            .or_else(|| std::env::var(ENV_URL).ok())
            .unwrap_or_default(),
        model_name: args
            .model
            .clone()
            .or_else(|| file.model.clone())
            .unwrap_or(defaults.model_name),
        temperature: args.temperature.or(file.temperature).unwrap_or(defaults.temperature),
        max_attempts: args.max_attempts.or(file.max_attempts).unwrap_or(defaults.max_attempts),
        timeout_secs: args.timeout_secs.or(file.timeout_secs).unwrap_or(defaults.timeout_secs),
        backoff_initial_secs: args
            .backoff_secs
            .or(file.backoff_secs)
            .unwrap_or(defaults.backoff_initial_secs),
        backoff_cap_secs: defaults.backoff_cap_secs,
        fallback_offline: !args.no_fallback && file.fallback.unwrap_or(true),
        max_in_flight: args
            .max_in_flight
            .or(file.max_in_flight)
            .unwrap_or(defaults.max_in_flight),
        api_key: std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty()),
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !offline && config.endpoint_url.is_empty() {
        return Err(CliError::Usage(format!(
            "no endpoint: pass --provider, set {ENV_URL}, or use --offline"
        )));
    }

    let mut snapshot = serde_json::to_value(&config).expect("snapshot");
    snapshot["offline"] = offline.into();
    let mut run = Run::start("revise", &ctx.out_dir, snapshot)?;
    let text = run.read_input(&args.input)?;
    let figures: Vec<FigurePair> = parse_jsonl(&args.input, &text)?;

    let http = (!offline).then(|| HttpChatProvider::new(&config));
    let provider = http.as_ref().map(|p| p as &(dyn ChatProvider + Sync));
    let results = revise_corpus(&figures, provider, &config);

    let mut revised = Vec::with_capacity(results.len());
    for (fig, r) in figures.iter().zip(results) {
        match r {
            Ok(r) => revised.push(r),
            Err(e @ (CaptionError::ProviderUnreachable(_) | CaptionError::AllAttemptsRejected { .. })) => {
                return Err(CliError::External(format!("{}/{}: {e}", fig.article, fig.figure_id)));
            }
            Err(e) => return Err(CliError::Input(format!("{}/{}: {e}", fig.article, fig.figure_id))),
        }
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &revised {
        let key = serde_json::to_value(r.provenance).expect("provenance");
        *counts.entry(key.as_str().unwrap_or_default().to_string()).or_default() += 1;
    }
    run.write_jsonl("figures.revised.jsonl", &revised)?;
    run.write_json(
        "revision_report.json",
        &serde_json::json!({ "figures": revised.len(), "provenance": counts }),
    )?;
    run.finish()?;
    Ok(())
}
