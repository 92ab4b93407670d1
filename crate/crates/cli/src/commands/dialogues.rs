use std::path::PathBuf;

use clap::Args;
use volmo_core::dialogue::{build_dialogue, parse_profile_text, ClinicalProfile};

use super::parse_jsonl;
use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

#[derive(Args, Debug)]
pub struct DialoguesArgs {
    /// cases.jsonl (one profile per line) or bracketed profile .txt files.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
}

pub fn run(ctx: &Context, args: DialoguesArgs) -> CliResult<()> {
    let mut run = Run::start("dialogues", &ctx.out_dir, serde_json::json!({}))?;
    let mut profiles: Vec<ClinicalProfile> = Vec::new();
    for path in super::collect_files(&args.input, &["jsonl", "txt"])? {
        let text = run.read_input(&path)?;
        if path.extension().is_some_and(|e| e == "txt") {
            let case_id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("case").to_string();
            profiles.push(parse_profile_text(&case_id, &text).map_err(|e| CliError::input(path.display(), e))?);
        } else {
            profiles.extend(parse_jsonl::<ClinicalProfile>(&path, &text)?);
        }
    }
    let scripts = profiles
        .iter()
        .map(|p| build_dialogue(p).map_err(|e| CliError::Input(format!("case {:?}: {e}", p.case_id))))
        .collect::<CliResult<Vec<_>>>()?;
    let prompt_only: usize = scripts.iter().flat_map(|s| &s.turns).filter(|t| t.prompt_only).count();
    run.write_jsonl("dialogues.jsonl", &scripts)?;
    run.write_json(
        "dialogue_report.json",
        &serde_json::json!({ "cases": scripts.len(), "turns": scripts.len() * 5, "prompt_only_turns": prompt_only }),
    )?;
    run.finish()?;
    Ok(())
}
