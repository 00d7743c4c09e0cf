// SPDX-License-Identifier: Apache-2.0

//! JSON Lines corpus files.
//!
//! One [`CorpusEntry`] per line, UTF-8. Blank lines are ignored.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::tree::{parse_sexpr, ParserAdapter, TypedTree};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub source: String,
    pub target: String,
    /// Pre-parsed source tree. When present it is used instead of a parser.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sexpr: Option<String>,
}

impl CorpusEntry {
    /// The source tree: the embedded S-expression when present, otherwise
    /// whatever `adapter` produces for `source_lang`.
    pub fn tree(&self, adapter: &dyn ParserAdapter) -> std::result::Result<TypedTree, ParseError> {
        match &self.sexpr {
            Some(s) => parse_sexpr(s),
            None => adapter.parse(&self.source, &self.source_lang),
        }
    }
}

pub fn parse_corpus_jsonl(text: &str, origin: &str) -> Result<Vec<CorpusEntry>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: CorpusEntry = serde_json::from_str(line).map_err(|e| Error::Format {
            path: origin.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(entry.id.clone()) {
            return Err(Error::DuplicateId(entry.id));
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let path = path.as_ref();
    parse_corpus_jsonl(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_corpus(path: impl AsRef<Path>, entries: &[CorpusEntry]) -> Result<()> {
    let mut out = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}
