//! Ingestion and refinement of scholarly work records.

mod abstract_text;
mod fetch;
mod model;
mod refine;

pub use abstract_text::reconstruct_abstract;
pub use fetch::{write_atomic, FetchConfig, FetchStats, OpenAlexClient, WorkStream, DEFAULT_ENDPOINT};
pub use model::{
    short_id, AuthorRef, Authorship, ConceptScore, MonthKey, MonthRange, PaperRecord, RawWork, Technology,
    TechnologyCatalog,
};
pub use refine::{month_bucket, redistributed_month, refine_corpus, CorpusStats, RefineConfig};

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Reads one JSON object per line; blank lines are skipped.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Row { line: i + 1, reason: e.to_string() })?,
        );
    }
    Ok(out)
}

pub fn write_jsonl<T: serde::Serialize>(mut writer: impl Write, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
