use clap::Args;
use volmo_core::par::Execution;
use volmo_core::schema::{convert_many, read_csv_records, read_jsonl_records, CohortManifest, SourceRecord};

use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// Seed for generated train/test splits; overrides per-dataset seeds.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(ctx: &Context, args: ConvertArgs) -> CliResult<()> {
    let file = &ctx.file;
    if file.datasets.is_empty() {
        return Err(CliError::Usage("convert needs [[datasets]] entries in --config".into()));
    }
    let seed = args.seed.or(file.seed);
    let mut entries = file.datasets.clone();
    for e in &mut entries {
        if let Some(s) = seed {
            e.spec.seed = s;
        }
        e.input = file.resolve(&e.input);
    }
    let snapshot = serde_json::json!({ "seed": seed, "datasets": entries });
    let mut run = Run::start("convert", &ctx.out_dir, snapshot)?;

    let mut jobs: Vec<(Vec<SourceRecord>, _)> = Vec::with_capacity(entries.len());
    for e in &entries {
        let text = run.read_input(&e.input)?;
        let ext = e.input.extension().and_then(|x| x.to_str()).unwrap_or("");
        let records = match ext {
            "csv" => read_csv_records(&text),
            "jsonl" | "json" => read_jsonl_records(&text),
            other => {
                return Err(CliError::Input(format!(
                    "{}: unsupported table format {other:?}",
                    e.input.display()
                )))
            }
        }
        .map_err(|err| CliError::input(e.input.display(), err))?;
        jobs.push((records, e.spec.clone()));
    }

    let mut screening = Vec::new();
    let mut staging = Vec::new();
    let mut rejects = Vec::new();
    let mut cohort = CohortManifest::default();
    for (result, e) in convert_many(&jobs, Execution::available()).into_iter().zip(&entries) {
        let conv = result.map_err(|err| CliError::Input(format!("dataset {}: {err}", e.spec.dataset_name)))?;
        cohort
            .add(&conv.manifest)
            .map_err(|err| CliError::Input(err.to_string()))?;
        screening.extend(conv.screening);
        staging.extend(conv.staging);
        rejects.extend(conv.rejects);
    }
    if !rejects.is_empty() {
        log::warn!("{} source units rejected; see rejects.jsonl", rejects.len());
    }
    run.write_jsonl("instances.screening.jsonl", &screening)?;
    run.write_jsonl("instances.staging.jsonl", &staging)?;
    run.write_jsonl("rejects.jsonl", &rejects)?;
    run.write_json(
        "manifest.json",
        &serde_json::json!({ "total_images": cohort.total_images(), "datasets": cohort.datasets }),
    )?;
    run.finish()?;
    Ok(())
}
