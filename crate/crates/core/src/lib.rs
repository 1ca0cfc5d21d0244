//! Passage-based document retrieval for question answering.
//!
//! Documents are ranked by the best passage they contain, where a passage is
//! one chosen occurrence of every query term and its score is the sum of a
//! pairwise proximity function over all term pairs:
//!
//! ```text
//! cp(p_i, p_j) = 1 / (1 + s * ln(1 + d)),   d = max(|p_i - p_j| - 1, 0)
//! score(passage) = sum over unordered term pairs of cp
//! ```
//!
//! The pipeline runs in four steps, each living in its own module:
//!
//! 1. [`corpus`] turns text into position-bearing token streams.
//! 2. [`index`] stores per-document occurrence positions of every term.
//! 3. [`passage`] enumerates candidate passages and finds the best one.
//! 4. [`scoring`] scores passages and ranks documents.
//!
//! [`baselines`] holds the position-blind tf-idf model and a fixed-window
//! BM25 passage model for comparison, and [`eval`] measures all of them with
//! mean reciprocal rank. [`cli`] backs the `pqr` binary.
//!
//! ```
//! use pqr::{build_index, rank_documents, Corpus, Document, EnumerationBudget, ProximityParams,
//!           TokenizerConfig};
//!
//! let corpus = Corpus::new(vec![
//!     Document::new("near", "the capital city of korea"),
//!     Document::new("far", "capital markets grew while the old city slept"),
//! ])
//! .unwrap();
//! let index = build_index(&corpus, &TokenizerConfig::default());
//! let terms = index.query_terms("capital city");
//! let ranking = rank_documents(
//!     &index,
//!     &terms,
//!     &ProximityParams::default(),
//!     &EnumerationBudget::default(),
//!     10,
//! )
//! .unwrap();
//! assert_eq!(ranking[0].doc_id, "near");
//! assert_eq!(ranking[0].norm_score, 1.0);
//! ```

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod index;
pub mod passage;
pub mod scoring;

pub use baselines::{bm25_window_rank, vsm_rank, Bm25Params, VsmModel, WindowBm25};
pub use corpus::{
    load_corpus, tokenize, Corpus, CorpusError, Document, Token, TokenStream, TokenizerConfig,
};
pub use eval::{reciprocal_rank, run_eval, EvalReport, Model, ModelParams, QrelSet};
pub use index::{
    build_index, load_index, save_index, CandidateMode, IndexError, PositionalIndex, PostingsList,
};
pub use passage::{
    best_passage, enumerate_passages, BestPassage, EnumerationBudget, OnExceed, Passage,
    PassageError,
};
pub use scoring::{
    cp, normalize_scores, passage_raw_score, rank_documents, ProximityParams, ScoredResult,
};

/// Token index within a document's original token sequence.
pub type Position = u32;
