//! Sectioned documents and question-answer records.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sectioned text unit: the unit of chunking and pair generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub title: Option<String>,
    pub sentences: Vec<String>,
}

/// One question with its supporting abstract sentences and reference answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRecord {
    pub pubid: String,
    pub question: String,
    #[serde(default)]
    pub gold_context: Vec<String>,
    pub long_answer: String,
}

impl Section {
    pub fn new(title: Option<&str>, sentences: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Section {
            title: title.map(String::from),
            sentences: sentences.into_iter().map(Into::into).collect(),
        }
    }
}

impl Document {
    pub fn new(id: impl Into<String>, sections: Vec<Section>) -> Self {
        Document { id: id.into(), sections }
    }

    /// Checks the structural invariants: non-empty id, at least one section,
    /// every section non-empty, no all-whitespace sentence.
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::InvalidDocument("empty id".into()));
        }
        if self.sections.is_empty() {
            return Err(Error::InvalidDocument(format!("{}: no sections", self.id)));
        }
        for (i, sec) in self.sections.iter().enumerate() {
            if sec.sentences.is_empty() {
                return Err(Error::InvalidDocument(format!("{}: section {i} has no sentences", self.id)));
            }
            if let Some(j) = sec.sentences.iter().position(|s| s.trim().is_empty()) {
                return Err(Error::InvalidDocument(format!(
                    "{}: section {i} sentence {j} is blank",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// All sentences in document order, sections concatenated.
    pub fn sentences(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().flat_map(|s| s.sentences.iter().map(String::as_str))
    }

    pub fn sentence_count(&self) -> usize {
        self.sections.iter().map(|s| s.sentences.len()).sum()
    }

    /// Plain-text rendering used by the character/token based chunkers:
    /// sentences joined by a space, sections separated by a blank line.
    /// Section titles are not included.
    pub fn full_text(&self) -> String {
        let mut out = String::new();
        for (i, sec) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            for (j, s) in sec.sentences.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(s);
            }
        }
        out
    }
}
