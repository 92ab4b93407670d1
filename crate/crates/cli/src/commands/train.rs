use std::path::PathBuf;

use clap::Args;
use volmo_core::train::{emit_training_config, validate_training_config};

use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training stage (1-3); repeatable. Defaults to all stages.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    stage: Vec<u8>,
    /// Validate this config document instead of emitting.
    #[arg(long)]
    validate: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: TrainArgs) -> CliResult<()> {
    let stages = if args.stage.is_empty() {
        vec![1, 2, 3]
    } else {
        args.stage.clone()
    };
    let mut run = Run::start(
        "emit-train-config",
        &ctx.out_dir,
        serde_json::json!({ "stages": stages, "validate": args.validate }),
    )?;
    if let Some(path) = &args.validate {
        let text = run.read_input(path)?;
        let verdict = validate_training_config(&text).map_err(|e| CliError::input(path.display(), e))?;
        run.write_json("train_config_verdict.json", &verdict)?;
        run.finish()?;
        if !verdict.ok {
            return Err(CliError::Input(format!(
                "{}: {} field differences, {} invariant violations",
                path.display(),
                verdict.diffs.len(),
                verdict.invariant_violations.len()
            )));
        }
        return Ok(());
    }
    for s in stages {
        let doc = emit_training_config(s).map_err(|e| CliError::Usage(e.to_string()))?;
        run.write_output(&format!("train.stage{s}.json"), doc.as_bytes())?;
    }
    run.finish()?;
    Ok(())
}
