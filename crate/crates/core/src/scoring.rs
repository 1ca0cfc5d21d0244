//! Proximity scoring and document ranking.
//!
//! Two occurrences `d` tokens apart (counting only the tokens strictly
//! between them) have proximity `1 / (1 + s * ln(1 + d))`: exactly 1 for
//! neighbours, decaying to 0 with distance. A passage scores the sum over all
//! unordered term pairs, and a document scores its best passage.
//!
//! Documents are ranked by that raw best-passage score. The normalized score
//! reported next to it is relative to the best document in the candidate
//! collection, so the top result always has `norm_score == 1.0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rayon::prelude::*;

use crate::index::{CandidateMode, PositionalIndex};
use crate::passage::{best_passage, EnumerationBudget, Passage, PassageError};
use crate::Position;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("distance weight s must be a positive finite number, got {0}")]
    InvalidWeight(f64),
    #[error("query has no terms")]
    EmptyQuery,
    #[error("a passage needs at least 2 terms, got {0}")]
    TooFewTerms(usize),
    #[error(transparent)]
    Passage(#[from] PassageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximityParams {
    /// Distance weight; larger values penalize gaps more sharply.
    pub s: f64,
    pub mode: CandidateMode,
}

impl Default for ProximityParams {
    fn default() -> Self {
        ProximityParams {
            s: 1.0,
            mode: CandidateMode::Strict,
        }
    }
}

impl ProximityParams {
    pub fn new(s: f64, mode: CandidateMode) -> Result<Self, ScoringError> {
        let p = ProximityParams { s, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.s.is_finite() && self.s > 0.0 {
            Ok(())
        } else {
            Err(ScoringError::InvalidWeight(self.s))
        }
    }
}

/// Pairwise proximity of two occurrences under distance weight `s`.
#[inline]
pub fn cp(p_i: Position, p_j: Position, s: f64) -> f64 {
    let gap = p_i.abs_diff(p_j).saturating_sub(1);
    1.0 / (1.0 + s * f64::from(gap).ln_1p())
}

/// Sum of `cp` over all unordered pairs.
///
/// Gaps are summed largest first so that passages with the same multiset of
/// pairwise gaps get bit-identical scores regardless of term order.
pub(crate) fn pair_sum(positions: &[Position], s: f64) -> f64 {
    const INLINE: usize = 66; // pairs of up to 12 terms
    let n = positions.len();
    let pairs = n * n.saturating_sub(1) / 2;
    let mut inline = [0u32; INLINE];
    let mut heap = Vec::new();
    let gaps: &mut [u32] = if pairs <= INLINE {
        &mut inline[..pairs]
    } else {
        heap.resize(pairs, 0);
        &mut heap
    };
    let mut k = 0;
    for (i, &a) in positions.iter().enumerate() {
        for &b in &positions[i + 1..] {
            gaps[k] = a.abs_diff(b);
            k += 1;
        }
    }
    gaps.sort_unstable_by(|x, y| y.cmp(x));
    gaps.iter().map(|&g| cp(0, g, s)).sum()
}

pub fn passage_raw_score(passage: &Passage, params: &ProximityParams) -> Result<f64, ScoringError> {
    if passage.len() < 2 {
        return Err(ScoringError::TooFewTerms(passage.len()));
    }
    Ok(pair_sum(&passage.positions(), params.s))
}

/// Divides every raw score by the largest one, keeping input order.
///
/// Returns an empty list when no score is positive.
pub fn normalize_scores(results: &[(String, f64)]) -> Vec<(String, f64, f64)> {
    let max = results.iter().map(|r| r.1).fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    results
        .iter()
        .map(|(id, raw)| (id.clone(), *raw, raw / max))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResult {
    pub doc_id: String,
    /// `None` for single-term fallback results.
    pub best_passage: Option<Passage>,
    pub raw_score: f64,
    pub norm_score: f64,
    pub approximate: bool,
    /// Ranked by term frequency because the query had a single term.
    pub fallback: bool,
}

/// Ranks documents by their best passage and returns the top `k`.
///
/// Query terms are deduplicated. A single-term query has no pairs to score,
/// so it falls back to term-frequency ranking with `fallback` set on every
/// result. No candidates is an empty ranking, not an error.
pub fn rank_documents<S: AsRef<str>>(
    index: &PositionalIndex,
    terms: &[S],
    params: &ProximityParams,
    budget: &EnumerationBudget,
    k: usize,
) -> Result<Vec<ScoredResult>, ScoringError> {
    params.validate()?;
    let mut distinct: Vec<&str> = terms.iter().map(AsRef::as_ref).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.is_empty() {
        return Err(ScoringError::EmptyQuery);
    }

    let candidates = index.candidate_documents(&distinct, params.mode);
    let mut scored: Vec<ScoredResult> = if distinct.len() == 1 {
        let postings = index.postings(distinct[0]);
        candidates
            .into_iter()
            .map(|doc_id| {
                let tf = postings
                    .and_then(|p| p.positions(&doc_id))
                    .map_or(0, <[_]>::len);
                ScoredResult {
                    doc_id,
                    best_passage: None,
                    raw_score: tf as f64,
                    norm_score: 0.0,
                    approximate: false,
                    fallback: true,
                }
            })
            .collect()
    } else {
        let outcomes: Vec<_> = candidates
            .par_iter()
            .map(|doc_id| best_passage(index, doc_id, &distinct, params, budget))
            .collect();
        let mut scored = Vec::with_capacity(outcomes.len());
        for (doc_id, outcome) in candidates.into_iter().zip(outcomes) {
            let best = outcome?;
            scored.push(ScoredResult {
                doc_id,
                best_passage: Some(best.passage),
                raw_score: best.raw_score,
                norm_score: 0.0,
                approximate: best.approximate,
                fallback: false,
            });
        }
        scored
    };

    scored.sort_by(|a, b| {
        b.raw_score
            .total_cmp(&a.raw_score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    if let Some(max) = scored.first().map(|r| r.raw_score).filter(|&m| m > 0.0) {
        for r in &mut scored {
            r.norm_score = r.raw_score / max;
        }
    }
    scored.truncate(k);
    Ok(scored)
}
