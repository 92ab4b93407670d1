use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use volmo_core::jats::{extract_corpus, JournalFilter};

use super::collect_files;
use crate::error::{CliError, CliResult};
use crate::run::Run;
use crate::Context;

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// JATS files (.xml, .nxml) or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Keep articles from every journal instead of the ophthalmology list.
    #[arg(long)]
    all_journals: bool,
}

#[derive(Serialize)]
struct Snapshot {
    all_journals: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    documents: usize,
    articles: usize,
    case_reports: usize,
    figures: usize,
    skipped_figures: usize,
    filtered_out: usize,
    failures: &'a [volmo_core::jats::ExtractionFailure],
}

pub fn run(ctx: &Context, args: ExtractArgs) -> CliResult<()> {
    let all_journals = args.all_journals || ctx.file.all_journals.unwrap_or(false);
    let config = serde_json::to_value(Snapshot { all_journals }).expect("snapshot");
    let mut run = Run::start("extract", &ctx.out_dir, config)?;

    let files = collect_files(&args.input, &["xml", "nxml"])?;
    if files.is_empty() {
        return Err(CliError::Input("no .xml or .nxml files found".into()));
    }
    let mut docs = Vec::with_capacity(files.len());
    for f in &files {
        let text = run.read_input(f)?;
        docs.push((f.display().to_string(), text));
    }
    let filter = JournalFilter::ophthalmology();
    let extraction = extract_corpus(&docs, if all_journals { None } else { Some(&filter) });
    for failure in &extraction.failures {
        log::warn!("{}: {}", failure.source, failure.error);
    }

    run.write_jsonl("articles.jsonl", &extraction.articles)?;
    run.write_jsonl("figures.jsonl", &extraction.figures)?;
    run.write_json(
        "extraction_report.json",
        &Report {
            documents: docs.len(),
            articles: extraction.articles.len(),
            case_reports: extraction
                .articles
                .iter()
                .filter(|a| a.article_type == volmo_core::jats::ArticleType::CaseReport)
                .count(),
            figures: extraction.figures.len(),
            skipped_figures: extraction.skipped_figures,
            filtered_out: extraction.filtered_out,
            failures: &extraction.failures,
        },
    )?;
    run.finish()?;
    Ok(())
}
