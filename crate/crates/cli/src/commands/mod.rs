pub mod compare;
pub mod convert;
pub mod dialogues;
pub mod eval_classify;
pub mod eval_text;
pub mod extract;
pub mod revise;
pub mod train;

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Files under `paths` (recursing into directories) whose extension is in `exts`, sorted.
pub fn collect_files(paths: &[PathBuf], exts: &[&str]) -> CliResult<Vec<PathBuf>> {
    fn walk(dir: &Path, exts: &[&str], out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(&p, exts, out)?;
            } else if p
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| exts.contains(&e))
            {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, exts, &mut out).map_err(|e| CliError::input(format!("cannot list {}", p.display()), e))?;
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(CliError::Input(format!("{} does not exist", p.display())));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Parses JSONL text, mapping errors to input errors that name the file.
pub fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> CliResult<Vec<T>> {
    volmo_core::jsonl::parse(text).map_err(|e| CliError::input(path.display(), e))
}
