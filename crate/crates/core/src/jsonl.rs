//! JSON Lines helpers shared by the pipeline stages.

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Serialize(#[from] serde_json::Error),
}

/// Parses one value per non-blank line. Line numbers in errors are 1-based.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, JsonlError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| JsonlError::Parse { line: i + 1, source }))
        .collect()
}

/// Serializes values one per line, each line terminated by `\n`.
///
/// Field order follows struct declaration order, so output is stable.
pub fn to_string<T: Serialize>(items: &[T]) -> Result<String, JsonlError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}
