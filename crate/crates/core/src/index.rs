//! Positional inverted index.
//!
//! For every term the index keeps, per document, the sorted list of token
//! positions at which it occurs. Postings entries are sorted by doc id so a
//! single document can be found by binary search.
//!
//! On disk an index is a directory:
//!
//! ```text
//! manifest.json    version, tokenizer config, counts, sha-256 of the other files
//! docs.jsonl       {"doc_id", "token_count", "title"?} per line, sorted by id
//! postings.jsonl   {"term", "entries": [["doc_id", [pos, ...]], ...]} per line, sorted by term
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{tokenize, Corpus, TokenizerConfig};
use crate::Position;

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const DOCS: &str = "docs.jsonl";
const POSTINGS: &str = "postings.jsonl";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("index manifest not found at {0}")]
    MissingManifest(PathBuf),
    #[error("index file missing: {0}")]
    MissingFile(PathBuf),
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checksum mismatch for {0}")]
    ChecksumMismatch(String),
    #[error("corrupt index file {file}, line {line}: {message}")]
    Corrupt {
        file: String,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which documents qualify as candidates for a multi-term query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    /// Every query term must occur.
    #[default]
    Strict,
    /// At least two distinct query terms must occur (one for single-term queries).
    Relaxed,
}

impl FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(CandidateMode::Strict),
            "relaxed" => Ok(CandidateMode::Relaxed),
            other => Err(format!(
                "unknown mode `{other}` (expected strict or relaxed)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostingsList {
    pub term: String,
    pub entries: Vec<(String, Vec<Position>)>,
}

impl PostingsList {
    pub fn positions(&self, doc_id: &str) -> Option<&[Position]> {
        self.entries
            .binary_search_by(|(id, _)| id.as_str().cmp(doc_id))
            .ok()
            .map(|i| self.entries[i].1.as_slice())
    }

    /// Number of documents containing the term.
    pub fn doc_freq(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEntry {
    pub token_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionalIndex {
    dictionary: BTreeMap<String, PostingsList>,
    doc_table: BTreeMap<String, DocEntry>,
    tokenizer_cfg: TokenizerConfig,
    version: u32,
}

pub fn build_index(corpus: &Corpus, cfg: &TokenizerConfig) -> PositionalIndex {
    let streams: Vec<_> = corpus
        .documents()
        .par_iter()
        .map(|doc| (doc, tokenize(&doc.text, cfg)))
        .collect();

    let mut postings: BTreeMap<String, BTreeMap<&str, Vec<Position>>> = BTreeMap::new();
    let mut doc_table = BTreeMap::new();
    for (doc, stream) in &streams {
        for token in &stream.tokens {
            postings
                .entry(token.term.clone())
                .or_default()
                .entry(doc.doc_id.as_str())
                .or_default()
                .push(token.position);
        }
        doc_table.insert(
            doc.doc_id.clone(),
            DocEntry {
                token_count: stream.token_count,
                title: doc.title.clone(),
            },
        );
    }

    let dictionary = postings
        .into_iter()
        .map(|(term, per_doc)| {
            let entries = per_doc
                .into_iter()
                .map(|(id, positions)| (id.to_string(), positions))
                .collect();
            (term.clone(), PostingsList { term, entries })
        })
        .collect();

    PositionalIndex {
        dictionary,
        doc_table,
        tokenizer_cfg: cfg.clone(),
        version: FORMAT_VERSION,
    }
}

impl PositionalIndex {
    pub fn tokenizer_cfg(&self) -> &TokenizerConfig {
        &self.tokenizer_cfg
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn doc_count(&self) -> usize {
        self.doc_table.len()
    }

    pub fn term_count(&self) -> usize {
        self.dictionary.len()
    }

    pub fn postings(&self, term: &str) -> Option<&PostingsList> {
        self.dictionary.get(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &PostingsList> {
        self.dictionary.values()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.doc_table.keys().map(String::as_str)
    }

    pub fn doc(&self, doc_id: &str) -> Option<&DocEntry> {
        self.doc_table.get(doc_id)
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_table.contains_key(doc_id)
    }

    pub fn token_count(&self, doc_id: &str) -> Result<u32, IndexError> {
        self.doc_table
            .get(doc_id)
            .map(|d| d.token_count)
            .ok_or_else(|| IndexError::UnknownDocument(doc_id.to_string()))
    }

    /// Occurrence positions of `term` in `doc_id`; empty when the term is absent.
    pub fn positions_of(&self, term: &str, doc_id: &str) -> Result<&[Position], IndexError> {
        if !self.doc_table.contains_key(doc_id) {
            return Err(IndexError::UnknownDocument(doc_id.to_string()));
        }
        Ok(self
            .dictionary
            .get(term)
            .and_then(|p| p.positions(doc_id))
            .unwrap_or(&[]))
    }

    /// Tokenizes a query with the index's own tokenizer and returns the
    /// distinct terms in sorted order.
    pub fn query_terms(&self, query: &str) -> Vec<String> {
        let stream = tokenize(query, &self.tokenizer_cfg);
        let set: BTreeSet<String> = stream.tokens.into_iter().map(|t| t.term).collect();
        set.into_iter().collect()
    }

    /// Documents qualifying for `terms` under `mode`, in ascending doc id order.
    pub fn candidate_documents<S: AsRef<str>>(
        &self,
        terms: &[S],
        mode: CandidateMode,
    ) -> Vec<String> {
        let distinct: BTreeSet<&str> = terms.iter().map(AsRef::as_ref).collect();
        if distinct.is_empty() {
            return Vec::new();
        }
        let needed = match mode {
            CandidateMode::Strict => distinct.len(),
            CandidateMode::Relaxed => distinct.len().min(2),
        };
        let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
        for term in &distinct {
            if let Some(postings) = self.dictionary.get(*term) {
                for (doc_id, _) in &postings.entries {
                    *hits.entry(doc_id.as_str()).or_default() += 1;
                }
            }
        }
        hits.into_iter()
            .filter(|&(_, n)| n >= needed)
            .map(|(id, _)| id.to_string())
            .collect()
    }

    fn validate(&self) -> Result<(), String> {
        for (term, list) in &self.dictionary {
            if term != &list.term {
                return Err(format!(
                    "postings keyed `{term}` carry term `{}`",
                    list.term
                ));
            }
            if !list.entries.windows(2).all(|w| w[0].0 < w[1].0) {
                return Err(format!("entries for `{term}` not sorted by doc id"));
            }
            for (doc_id, positions) in &list.entries {
                let doc = self
                    .doc_table
                    .get(doc_id)
                    .ok_or_else(|| format!("`{term}` references unknown document `{doc_id}`"))?;
                if positions.is_empty() {
                    return Err(format!("empty position list for `{term}` in `{doc_id}`"));
                }
                if !positions.windows(2).all(|w| w[0] < w[1]) {
                    return Err(format!(
                        "positions for `{term}` in `{doc_id}` not strictly increasing"
                    ));
                }
                if positions.last().is_some_and(|&p| p >= doc.token_count) {
                    return Err(format!("position out of range for `{term}` in `{doc_id}`"));
                }
            }
        }
        Ok(())
    }
}

pub fn positions_of<'a>(
    index: &'a PositionalIndex,
    term: &str,
    doc_id: &str,
) -> Result<&'a [Position], IndexError> {
    index.positions_of(term, doc_id)
}

pub fn candidate_documents<S: AsRef<str>>(
    index: &PositionalIndex,
    terms: &[S],
    mode: CandidateMode,
) -> Vec<String> {
    index.candidate_documents(terms, mode)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    tokenizer: TokenizerConfig,
    doc_count: usize,
    term_count: usize,
    checksums: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct DocRecord {
    doc_id: String,
    #[serde(flatten)]
    entry: DocEntry,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IndexError> {
    let io = |source| IndexError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    w.write_all(bytes).map_err(io)?;
    w.flush().map_err(io)
}

fn to_jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("index records always serialize");
        out.push(b'\n');
    }
    out
}

pub fn save_index(index: &PositionalIndex, dir: impl AsRef<Path>) -> Result<(), IndexError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| IndexError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let docs = to_jsonl(index.doc_table.iter().map(|(id, entry)| DocRecord {
        doc_id: id.clone(),
        entry: entry.clone(),
    }));
    let postings = to_jsonl(index.dictionary.values());

    let manifest = Manifest {
        version: index.version,
        tokenizer: index.tokenizer_cfg.clone(),
        doc_count: index.doc_count(),
        term_count: index.term_count(),
        checksums: BTreeMap::from([
            (DOCS.to_string(), sha256_hex(&docs)),
            (POSTINGS.to_string(), sha256_hex(&postings)),
        ]),
    };
    let mut manifest_bytes =
        serde_json::to_vec_pretty(&manifest).expect("manifest always serializes");
    manifest_bytes.push(b'\n');

    write_file(&dir.join(DOCS), &docs)?;
    write_file(&dir.join(POSTINGS), &postings)?;
    // manifest last: a directory without one is never mistaken for a complete index
    write_file(&dir.join(MANIFEST), &manifest_bytes)
}

fn read_checked(dir: &Path, name: &str, manifest: &Manifest) -> Result<String, IndexError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(IndexError::MissingFile(path));
    }
    let bytes = fs::read(&path).map_err(|source| IndexError::Io { path, source })?;
    match manifest.checksums.get(name) {
        Some(expected) if *expected == sha256_hex(&bytes) => {}
        _ => return Err(IndexError::ChecksumMismatch(name.to_string())),
    }
    String::from_utf8(bytes).map_err(|e| IndexError::Corrupt {
        file: name.to_string(),
        line: 0,
        message: e.to_string(),
    })
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(file: &str, text: &str) -> Result<Vec<T>, IndexError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| IndexError::Corrupt {
                file: file.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_index(dir: impl AsRef<Path>) -> Result<PositionalIndex, IndexError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(IndexError::MissingManifest(manifest_path));
    }
    let raw = fs::read_to_string(&manifest_path).map_err(|source| IndexError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&raw).map_err(|e| IndexError::Corrupt {
        file: MANIFEST.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if manifest.version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found: manifest.version,
            expected: FORMAT_VERSION,
        });
    }

    let docs: Vec<DocRecord> = parse_jsonl(DOCS, &read_checked(dir, DOCS, &manifest)?)?;
    let postings: Vec<PostingsList> =
        parse_jsonl(POSTINGS, &read_checked(dir, POSTINGS, &manifest)?)?;

    let corrupt = |file: &str, message: String| IndexError::Corrupt {
        file: file.to_string(),
        line: 0,
        message,
    };
    if docs.len() != manifest.doc_count {
        return Err(corrupt(
            DOCS,
            format!(
                "expected {} documents, found {}",
                manifest.doc_count,
                docs.len()
            ),
        ));
    }
    if postings.len() != manifest.term_count {
        return Err(corrupt(
            POSTINGS,
            format!(
                "expected {} terms, found {}",
                manifest.term_count,
                postings.len()
            ),
        ));
    }

    let doc_table: BTreeMap<_, _> = docs.into_iter().map(|r| (r.doc_id, r.entry)).collect();
    let dictionary: BTreeMap<_, _> = postings.into_iter().map(|p| (p.term.clone(), p)).collect();
    if doc_table.len() != manifest.doc_count {
        return Err(corrupt(DOCS, "duplicate doc_id".to_string()));
    }
    if dictionary.len() != manifest.term_count {
        return Err(corrupt(POSTINGS, "duplicate term".to_string()));
    }

    let index = PositionalIndex {
        dictionary,
        doc_table,
        tokenizer_cfg: manifest.tokenizer,
        version: manifest.version,
    };
    index.validate().map_err(|m| corrupt(POSTINGS, m))?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus(docs: &[(&str, &str)]) -> Corpus {
        Corpus::new(docs.iter().map(|(id, t)| Document::new(*id, *t)).collect()).unwrap()
    }

    #[test]
    fn single_document_postings() {
        let index = build_index(&corpus(&[("d1", "a b a")]), &TokenizerConfig::default());
        assert_eq!(
            index.postings("a").unwrap().entries,
            vec![("d1".to_string(), vec![0, 2])]
        );
        assert_eq!(
            index.postings("b").unwrap().entries,
            vec![("d1".to_string(), vec![1])]
        );
        assert_eq!(index.token_count("d1").unwrap(), 3);
    }

    #[test]
    fn empty_corpus() {
        let index = build_index(&Corpus::default(), &TokenizerConfig::default());
        assert_eq!(index.term_count(), 0);
        assert_eq!(index.doc_count(), 0);
    }

    #[test]
    fn entries_sorted_by_doc_id() {
        let index = build_index(
            &corpus(&[("zz", "x"), ("aa", "y x")]),
            &TokenizerConfig::default(),
        );
        let ids: Vec<_> = index
            .postings("x")
            .unwrap()
            .entries
            .iter()
            .map(|(id, _)| id.as_str())
            .collect();
        assert_eq!(ids, ["aa", "zz"]);
    }

    #[test]
    fn positions_lookup() {
        let index = build_index(&corpus(&[("d1", "a b a")]), &TokenizerConfig::default());
        assert_eq!(index.positions_of("a", "d1").unwrap(), &[0, 2]);
        assert!(index.positions_of("z", "d1").unwrap().is_empty());
        assert!(
            matches!(index.positions_of("a", "d9"), Err(IndexError::UnknownDocument(id)) if id == "d9")
        );
    }

    #[test]
    fn candidates_by_mode() {
        let index = build_index(
            &corpus(&[("d1", "a b"), ("d2", "a c")]),
            &TokenizerConfig::default(),
        );
        assert_eq!(
            index.candidate_documents(&["a", "b"], CandidateMode::Strict),
            ["d1"]
        );
        assert_eq!(
            index.candidate_documents(&["a", "b"], CandidateMode::Relaxed),
            ["d1"]
        );
        assert_eq!(
            index.candidate_documents(&["a"], CandidateMode::Relaxed),
            ["d1", "d2"]
        );
        assert_eq!(
            index.candidate_documents(&["a", "b", "c"], CandidateMode::Relaxed),
            ["d1", "d2"]
        );
        assert!(index
            .candidate_documents(&["a", "b", "c"], CandidateMode::Strict)
            .is_empty());
        assert!(index
            .candidate_documents::<&str>(&[], CandidateMode::Strict)
            .is_empty());
    }

    #[test]
    fn query_terms_are_distinct_and_sorted() {
        let index = build_index(&corpus(&[("d1", "a")]), &TokenizerConfig::default());
        assert_eq!(index.query_terms("B a b A"), ["a", "b"]);
    }

    #[test]
    fn round_trip() {
        let cfg = TokenizerConfig::default().with_stopwords(["the"]);
        let c = Corpus::new(vec![
            Document::new("d1", "the quick brown fox"),
            Document::new("d2", "quick quick").with_title("Second"),
            Document::new("d3", ""),
        ])
        .unwrap();
        let index = build_index(&c, &cfg);
        let dir = tempfile::tempdir().unwrap();
        save_index(&index, dir.path()).unwrap();
        assert_eq!(load_index(dir.path()).unwrap(), index);
    }

    #[test]
    fn empty_dir_has_no_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_index(dir.path()),
            Err(IndexError::MissingManifest(_))
        ));
    }

    #[test]
    fn newer_version_rejected() {
        let index = build_index(&corpus(&[("d1", "a")]), &TokenizerConfig::default());
        let dir = tempfile::tempdir().unwrap();
        save_index(&index, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST);
        let mut manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        manifest["version"] = (FORMAT_VERSION + 1).into();
        fs::write(&path, manifest.to_string()).unwrap();
        assert!(matches!(
            load_index(dir.path()),
            Err(IndexError::VersionMismatch { found, .. }) if found == FORMAT_VERSION + 1
        ));
    }

    #[test]
    fn tampered_postings_fail_checksum() {
        let index = build_index(&corpus(&[("d1", "a b")]), &TokenizerConfig::default());
        let dir = tempfile::tempdir().unwrap();
        save_index(&index, dir.path()).unwrap();
        let path = dir.path().join(POSTINGS);
        let text = fs::read_to_string(&path).unwrap().replace("[0]", "[1]");
        fs::write(&path, text).unwrap();
        assert!(
            matches!(load_index(dir.path()), Err(IndexError::ChecksumMismatch(f)) if f == POSTINGS)
        );
    }

    #[test]
    fn missing_docs_file() {
        let index = build_index(&corpus(&[("d1", "a")]), &TokenizerConfig::default());
        let dir = tempfile::tempdir().unwrap();
        save_index(&index, dir.path()).unwrap();
        fs::remove_file(dir.path().join(DOCS)).unwrap();
        assert!(matches!(
            load_index(dir.path()),
            Err(IndexError::MissingFile(_))
        ));
    }
}
