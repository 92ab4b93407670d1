//! `volmo` command-line entry point.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;
use crate::error::{log_error, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "volmo",
    version,
    about = "Ophthalmology corpus curation and model evaluation toolkit"
)]
struct Cli {
    /// TOML config file; command-line flags take precedence over its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for outputs and the run manifest.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse JATS articles into article records and figure/caption pairs.
    Extract(commands::extract::ExtractArgs),
    /// Revise figure captions through a chat-completion endpoint or the offline cleaner.
    Revise(commands::revise::ReviseArgs),
    /// Convert benchmark label tables into screening and staging instances.
    Convert(commands::convert::ConvertArgs),
    /// Build five-turn clinical dialogues from structured case profiles.
    Dialogues(commands::dialogues::DialoguesArgs),
    /// Score generated text against references (BLEU, ROUGE-L, BERTScore, SBERT).
    EvalText(commands::eval_text::EvalTextArgs),
    /// Score classification outputs against converted instances.
    EvalClassify(commands::eval_classify::EvalClassifyArgs),
    /// Paired bootstrap and Wilcoxon comparison of two models.
    Compare(commands::compare::CompareArgs),
    /// Emit or validate training configurations.
    EmitTrainConfig(commands::train::TrainArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Extract(_) => "extract",
            Command::Revise(_) => "revise",
            Command::Convert(_) => "convert",
            Command::Dialogues(_) => "dialogues",
            Command::EvalText(_) => "eval-text",
            Command::EvalClassify(_) => "eval-classify",
            Command::Compare(_) => "compare",
            Command::EmitTrainConfig(_) => "emit-train-config",
        }
    }
}

/// Settings shared by every subcommand after config/flag layering.
pub struct Context {
    pub out_dir: PathBuf,
    pub file: FileConfig,
}

/// Shared flag group for bootstrap settings.
#[derive(Args, Debug, Clone, Default)]
pub struct BootstrapFlags {
    /// Seed for the resampling generator.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of bootstrap replicates.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Instances drawn per replicate.
    #[arg(long)]
    pub sample_size: Option<usize>,
}

fn run(cli: Cli) -> Result<(), (CliError, Option<PathBuf>)> {
    let file = FileConfig::load(cli.config.as_deref()).map_err(|e| (e, None))?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| file.out_dir.as_ref().map(|p| file.resolve(p)))
        .ok_or_else(|| {
            (
                CliError::Usage("--out-dir is required (flag or config key)".into()),
                None,
            )
        })?;
    let ctx = Context {
        out_dir: out_dir.clone(),
        file,
    };
    let result = match cli.command {
        Command::Extract(a) => commands::extract::run(&ctx, a),
        Command::Revise(a) => commands::revise::run(&ctx, a),
        Command::Convert(a) => commands::convert::run(&ctx, a),
        Command::Dialogues(a) => commands::dialogues::run(&ctx, a),
        Command::EvalText(a) => commands::eval_text::run(&ctx, a),
        Command::EvalClassify(a) => commands::eval_classify::run(&ctx, a),
        Command::Compare(a) => commands::compare::run(&ctx, a),
        Command::EmitTrainConfig(a) => commands::train::run(&ctx, a),
    };
    result.map_err(|e| (e, Some(out_dir)))
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => {}
        Err((err, out_dir)) => {
            log_error(name, &err, out_dir.as_deref());
            std::process::exit(err.exit_code());
        }
    }
}
