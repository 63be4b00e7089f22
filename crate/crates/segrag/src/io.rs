//! Line-delimited JSON files and atomic writes.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use segrag_core::{Document, QaRecord};

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it).expect("in-memory serialization");
        out.push(b'\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, &to_jsonl(items))
}

/// Reads one JSON value per non-blank line. Errors carry the 1-based line
/// number and serde's description, which names the offending field.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| Error::Validation {
            path: path.into(),
            line: i + 1,
            message: format!("record {}: {e}", i + 1),
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn load_documents(path: &Path) -> Result<Vec<Document>> {
    let docs: Vec<Document> = read_jsonl(path)?;
    // blank lines are skipped, so report by record position
    for (i, d) in docs.iter().enumerate() {
        d.validate().map_err(|e| Error::Validation { path: path.into(), line: i + 1, message: e.to_string() })?;
    }
    Ok(docs)
}

pub fn save_documents(docs: &[Document], path: &Path) -> Result<()> {
    write_jsonl(path, docs)
}

pub fn load_qa(path: &Path) -> Result<Vec<QaRecord>> {
    let recs: Vec<QaRecord> = read_jsonl(path)?;
    for (i, r) in recs.iter().enumerate() {
        let field = if r.pubid.trim().is_empty() {
            Some("pubid")
        } else if r.question.trim().is_empty() {
            Some("question")
        } else if r.long_answer.trim().is_empty() {
            Some("long_answer")
        } else {
            None
        };
        if let Some(field) = field {
            return Err(Error::Validation {
                path: path.into(),
                line: i + 1,
                message: format!("record {}: field `{field}` is empty", i + 1),
            });
        }
    }
    Ok(recs)
}
