//! Comparison models: tf-idf cosine ranking and fixed-window BM25.
//!
//! Both ignore where query terms sit relative to each other. The tf-idf model
//! is position-blind outright; the windowed BM25 model only sees terms that
//! happen to fall into the same fixed-size window.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::PositionalIndex;
use crate::Position;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid BM25 parameters: {0}")]
    InvalidParams(String),
}

fn distinct<S: AsRef<str>>(terms: &[S]) -> BTreeSet<&str> {
    terms.iter().map(AsRef::as_ref).collect()
}

fn sort_and_cut(mut scores: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scores.truncate(k);
    scores
}

/// Cosine similarity between raw-tf * ln(N/df) document vectors and a query
/// vector of idf weights.
#[derive(Debug, Clone)]
pub struct VsmModel<'a> {
    index: &'a PositionalIndex,
    doc_norms: BTreeMap<&'a str, f64>,
}

impl<'a> VsmModel<'a> {
    pub fn new(index: &'a PositionalIndex) -> Self {
        let n = index.doc_count() as f64;
        let mut sq: BTreeMap<&str, f64> = BTreeMap::new();
        for postings in index.terms() {
            let idf = (n / postings.doc_freq() as f64).ln();
            for (doc_id, positions) in &postings.entries {
                let w = positions.len() as f64 * idf;
                *sq.entry(doc_id.as_str()).or_default() += w * w;
            }
        }
        let doc_norms = sq.into_iter().map(|(id, s)| (id, s.sqrt())).collect();
        VsmModel { index, doc_norms }
    }

    fn idf(&self, df: usize) -> f64 {
        (self.index.doc_count() as f64 / df as f64).ln()
    }

    /// Top `k` documents with a positive cosine score; ties by doc id.
    pub fn rank<S: AsRef<str>>(&self, terms: &[S], k: usize) -> Vec<(String, f64)> {
        let mut dot: BTreeMap<&str, f64> = BTreeMap::new();
        let mut query_sq = 0.0;
        for term in distinct(terms) {
            let Some(postings) = self.index.postings(term) else {
                continue;
            };
            let idf = self.idf(postings.doc_freq());
            query_sq += idf * idf;
            for (doc_id, positions) in &postings.entries {
                *dot.entry(doc_id.as_str()).or_default() += positions.len() as f64 * idf * idf;
            }
        }
        let query_norm = query_sq.sqrt();
        let scores = dot
            .into_iter()
            .filter_map(|(doc_id, d)| {
                let norm = self.doc_norms.get(doc_id).copied().unwrap_or(0.0) * query_norm;
                (norm > 0.0 && d > 0.0).then(|| (doc_id.to_string(), d / norm))
            })
            .collect();
        sort_and_cut(scores, k)
    }
}

pub fn vsm_rank<S: AsRef<str>>(
    index: &PositionalIndex,
    terms: &[S],
    k: usize,
) -> Vec<(String, f64)> {
    VsmModel::new(index).rank(terms, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    pub window_tokens: u32,
    pub window_stride: u32,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 1.2,
            b: 0.75,
            window_tokens: 300,
            window_stride: 150,
        }
    }
}

impl Bm25Params {
    /// Window of `window_tokens` with the default half-window stride.
    pub fn with_window(window_tokens: u32) -> Self {
        Bm25Params {
            window_tokens,
            window_stride: (window_tokens / 2).max(1),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: &str| Err(BaselineError::InvalidParams(m.to_string()));
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return bad("k1 must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.b) {
            return bad("b must be within [0, 1]");
        }
        if self.window_tokens == 0 || self.window_stride == 0 {
            return bad("window size and stride must be positive");
        }
        if self.window_stride > self.window_tokens {
            return bad("stride must not exceed the window size");
        }
        Ok(())
    }
}

/// Number of windows over a document of `len` tokens: one when the document
/// fits, otherwise enough strides for the last window to reach the end.
pub fn window_count(len: u32, window: u32, stride: u32) -> u32 {
    if len <= window {
        1
    } else {
        (len - window).div_ceil(stride) + 1
    }
}

/// Half-open `[start, end)` token ranges of every window, clipped to `len`.
pub fn windows(len: u32, window: u32, stride: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..window_count(len, window, stride)).map(move |i| {
        let start = i * stride;
        (start, (start + window).min(len))
    })
}

fn count_in(positions: &[Position], start: u32, end: u32) -> u32 {
    (positions.partition_point(|&p| p < end) - positions.partition_point(|&p| p < start)) as u32
}

/// BM25 over fixed sliding windows; a document scores its best window.
///
/// Every window in the collection is a BM25 "document": `N` is the total
/// window count, `avgdl` the mean window length and a term's document
/// frequency the number of windows containing it.
#[derive(Debug, Clone)]
pub struct WindowBm25<'a> {
    index: &'a PositionalIndex,
    params: Bm25Params,
    total_windows: f64,
    avg_window_len: f64,
}

impl<'a> WindowBm25<'a> {
    pub fn new(index: &'a PositionalIndex, params: Bm25Params) -> Result<Self, BaselineError> {
        params.validate()?;
        let (mut total, mut len_sum) = (0u64, 0u64);
        for doc_id in index.doc_ids() {
            let len = index.doc(doc_id).map_or(0, |d| d.token_count);
            for (start, end) in windows(len, params.window_tokens, params.window_stride) {
                total += 1;
                len_sum += u64::from(end - start);
            }
        }
        let avg_window_len = if total == 0 {
            0.0
        } else {
            len_sum as f64 / total as f64
        };
        Ok(WindowBm25 {
            index,
            params,
            total_windows: total as f64,
            avg_window_len,
        })
    }

    pub fn params(&self) -> &Bm25Params {
        &self.params
    }

    pub fn rank<S: AsRef<str>>(&self, terms: &[S], k: usize) -> Vec<(String, f64)> {
        let p = &self.params;
        let postings: Vec<_> = distinct(terms)
            .into_iter()
            .filter_map(|t| self.index.postings(t))
            .collect();

        // per document: (window length, tf of each query term) for every window
        let mut per_doc: BTreeMap<&str, Vec<(u32, Vec<u32>)>> = BTreeMap::new();
        for list in &postings {
            for (doc_id, _) in &list.entries {
                per_doc.entry(doc_id.as_str()).or_insert_with(|| {
                    let len = self.index.doc(doc_id).map_or(0, |d| d.token_count);
                    windows(len, p.window_tokens, p.window_stride)
                        .map(|(start, end)| {
                            let tfs = postings
                                .iter()
                                .map(|pl| {
                                    pl.positions(doc_id)
                                        .map_or(0, |ps| count_in(ps, start, end))
                                })
                                .collect();
                            (end - start, tfs)
                        })
                        .collect()
                });
            }
        }

        let mut window_df = vec![0u64; postings.len()];
        for wins in per_doc.values() {
            for (_, tfs) in wins {
                for (df, &tf) in window_df.iter_mut().zip(tfs) {
                    if tf > 0 {
                        *df += 1;
                    }
                }
            }
        }
        let n = self.total_windows;
        let idf: Vec<f64> = window_df
            .iter()
            .map(|&df| (1.0 + (n - df as f64 + 0.5) / (df as f64 + 0.5)).ln())
            .collect();

        let scores = per_doc
            .into_iter()
            .map(|(doc_id, wins)| {
                let best = wins
                    .iter()
                    .map(|(len, tfs)| {
                        let norm = if self.avg_window_len > 0.0 {
                            p.k1 * (1.0 - p.b + p.b * f64::from(*len) / self.avg_window_len)
                        } else {
                            p.k1
                        };
                        tfs.iter()
                            .zip(&idf)
                            .filter(|(&tf, _)| tf > 0)
                            .map(|(&tf, w)| {
                                let tf = f64::from(tf);
                                w * tf * (p.k1 + 1.0) / (tf + norm)
                            })
                            .sum::<f64>()
                    })
                    .fold(0.0_f64, f64::max);
                (doc_id.to_string(), best)
            })
            .filter(|(_, s)| *s > 0.0)
            .collect();
        sort_and_cut(scores, k)
    }
}

pub fn bm25_window_rank<S: AsRef<str>>(
    index: &PositionalIndex,
    terms: &[S],
    params: &Bm25Params,
    k: usize,
) -> Result<Vec<(String, f64)>, BaselineError> {
    Ok(WindowBm25::new(index, *params)?.rank(terms, k))
}
