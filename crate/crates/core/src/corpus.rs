//! Document ingestion and tokenization.
//!
//! Token positions always index the original token sequence: a stopword or a
//! too-short token still occupies its slot, it just emits no entry. Proximity
//! distances downstream are therefore measured in real text tokens.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Position;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("empty doc_id on line {line}")]
    EmptyId { line: usize },
    #[error("duplicate doc_id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            text: text.into(),
            title: None,
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }
}

/// An ordered collection of documents with unique, non-empty ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(CorpusError::EmptyId { line: i + 1 });
            }
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.doc_id.clone()));
            }
        }
        Ok(Corpus { docs })
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.docs
    }
}

/// Reads a JSON-lines corpus: one `{"doc_id", "text", "title"?}` object per line.
///
/// Blank lines are skipped. Errors carry 1-based line numbers.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);

    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if doc.doc_id.is_empty() {
            return Err(CorpusError::EmptyId { line: line_no });
        }
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateId(doc.doc_id));
        }
        docs.push(doc);
    }
    Ok(Corpus { docs })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub min_token_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            stopwords: BTreeSet::new(),
            min_token_len: 1,
        }
    }
}

impl TokenizerConfig {
    /// Stopwords are normalized the same way terms are, so `The` matches `the`.
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for w in words {
            let w = self.normalize(w.as_ref());
            if !w.is_empty() {
                self.stopwords.insert(w);
            }
        }
        self
    }

    pub fn with_min_token_len(mut self, len: usize) -> Self {
        self.min_token_len = len.max(1);
        self
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    fn normalize(&self, raw: &str) -> String {
        if self.lowercase {
            raw.to_lowercase()
        } else {
            raw.to_string()
        }
    }

    fn keeps(&self, term: &str) -> bool {
        term.chars().count() >= self.min_token_len && !self.stopwords.contains(term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub term: String,
    pub position: Position,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Number of raw tokens, filtered ones included.
    pub token_count: u32,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Position)> {
        self.tokens.iter().map(|t| (t.term.as_str(), t.position))
    }
}

/// Splits on Unicode non-alphanumeric characters and case-folds.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> TokenStream {
    let mut tokens = Vec::new();
    let mut position: Position = 0;
    for raw in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
    {
        let term = cfg.normalize(raw);
        if cfg.keeps(&term) {
            tokens.push(Token { term, position });
        }
        position += 1;
    }
    TokenStream {
        tokens,
        token_count: position,
    }
}
