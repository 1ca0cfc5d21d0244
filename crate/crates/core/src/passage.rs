//! Candidate passages and best-passage search.
//!
//! A passage picks exactly one occurrence of every query term in a document,
//! so the candidate set of a document is the Cartesian product of its
//! per-term occurrence lists. Terms are always handled in sorted order; the
//! position tuple of a passage follows that order, which makes results
//! independent of how the caller ordered the query.
//!
//! Exhaustive search over the product is the reference behaviour. When the
//! product exceeds [`EnumerationBudget::max_combinations`] the caller picks
//! between an error and the anchor-greedy heuristic, whose results are
//! flagged `approximate`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{IndexError, PositionalIndex};
use crate::scoring::{pair_sum, ProximityParams};
use crate::Position;

/// Scores closer than this are treated as equal; the lexicographically
/// smaller position tuple wins.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum PassageError {
    #[error("document `{doc_id}` has {combinations} candidate passages, budget is {max}")]
    BudgetExceeded {
        doc_id: String,
        combinations: u128,
        max: u64,
    },
    #[error("term `{term}` does not occur in document `{doc_id}`")]
    TermAbsent { term: String, doc_id: String },
    #[error("document `{doc_id}` has {present} scorable query terms, need at least 2")]
    TooFewTerms { doc_id: String, present: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    /// One `(term, position)` per distinct term, in sorted term order.
    pub choices: Vec<(String, Position)>,
}

impl Passage {
    pub fn span_start(&self) -> Position {
        self.choices.iter().map(|c| c.1).min().unwrap_or(0)
    }

    pub fn span_end(&self) -> Position {
        self.choices.iter().map(|c| c.1).max().unwrap_or(0)
    }

    pub fn positions(&self) -> Vec<Position> {
        self.choices.iter().map(|c| c.1).collect()
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}

impl fmt::Display for Passage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (term, pos)) in self.choices.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{term}@{pos}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnExceed {
    #[default]
    Error,
    Approximate,
}

impl FromStr for OnExceed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(OnExceed::Error),
            "approximate" => Ok(OnExceed::Approximate),
            other => Err(format!(
                "unknown budget policy `{other}` (expected error or approximate)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    pub max_combinations: u64,
    pub on_exceed: OnExceed,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_combinations: 100_000,
            on_exceed: OnExceed::Error,
        }
    }
}

impl EnumerationBudget {
    pub fn new(max_combinations: u64, on_exceed: OnExceed) -> Self {
        EnumerationBudget {
            max_combinations: max_combinations.max(1),
            on_exceed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestPassage {
    pub passage: Passage,
    pub raw_score: f64,
    pub approximate: bool,
}

/// Per-term occurrence lists of one document, terms deduplicated and sorted.
struct Occurrences<'a> {
    doc_id: &'a str,
    terms: Vec<&'a str>,
    lists: Vec<&'a [Position]>,
}

impl<'a> Occurrences<'a> {
    /// Collects the lists of the terms that occur; absent terms are reported
    /// back so the caller can decide whether that is an error.
    fn gather<S: AsRef<str>>(
        index: &'a PositionalIndex,
        doc_id: &'a str,
        terms: &'a [S],
    ) -> Result<(Self, Vec<&'a str>), PassageError> {
        let distinct: BTreeSet<&str> = terms.iter().map(AsRef::as_ref).collect();
        let mut occ = Occurrences {
            doc_id,
            terms: Vec::with_capacity(distinct.len()),
            lists: Vec::with_capacity(distinct.len()),
        };
        let mut absent = Vec::new();
        for term in distinct {
            let positions = index.positions_of(term, doc_id)?;
            if positions.is_empty() {
                absent.push(term);
            } else {
                occ.terms.push(term);
                occ.lists.push(positions);
            }
        }
        Ok((occ, absent))
    }

    fn combinations(&self) -> u128 {
        self.lists
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128))
    }

    fn check_budget(&self, budget: &EnumerationBudget) -> Result<(), PassageError> {
        let combinations = self.combinations();
        if combinations > budget.max_combinations as u128 {
            return Err(PassageError::BudgetExceeded {
                doc_id: self.doc_id.to_string(),
                combinations,
                max: budget.max_combinations,
            });
        }
        Ok(())
    }

    fn passage(&self, positions: &[Position]) -> Passage {
        Passage {
            doc_id: self.doc_id.to_string(),
            choices: self
                .terms
                .iter()
                .zip(positions)
                .map(|(t, &p)| (t.to_string(), p))
                .collect(),
        }
    }

    /// Visits every position tuple in lexicographic order.
    fn for_each_tuple(&self, mut visit: impl FnMut(&[Position])) {
        let n = self.lists.len();
        let mut cursor = vec![0usize; n];
        let mut tuple: Vec<Position> = self.lists.iter().map(|l| l[0]).collect();
        loop {
            visit(&tuple);
            let mut k = n;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < self.lists[k].len() {
                    tuple[k] = self.lists[k][cursor[k]];
                    break;
                }
                cursor[k] = 0;
                tuple[k] = self.lists[k][0];
            }
        }
    }

    fn exact_best(&self, s: f64) -> (Vec<Position>, f64) {
        let mut best: Option<(Vec<Position>, f64)> = None;
        self.for_each_tuple(|tuple| {
            let score = pair_sum(tuple, s);
            match &mut best {
                Some((_, b)) if score <= *b + TIE_EPS => {}
                _ => best = Some((tuple.to_vec(), score)),
            }
        });
        best.expect("occurrence lists are non-empty")
    }

    fn anchor_greedy(&self, s: f64) -> (Vec<Position>, f64) {
        let mut best: Option<(Vec<Position>, f64)> = None;
        let mut tuple = vec![0; self.lists.len()];
        for (anchor_term, anchors) in self.lists.iter().enumerate() {
            for &anchor in anchors.iter() {
                for (j, list) in self.lists.iter().enumerate() {
                    tuple[j] = if j == anchor_term {
                        anchor
                    } else {
                        nearest(list, anchor)
                    };
                }
                let score = pair_sum(&tuple, s);
                let better = match &best {
                    None => true,
                    Some((bt, b)) => score > b + TIE_EPS || (score >= b - TIE_EPS && tuple < *bt),
                };
                if better {
                    best = Some((tuple.clone(), score));
                }
            }
        }
        best.expect("occurrence lists are non-empty")
    }
}

/// Occurrence in a sorted list closest to `target`; ties go to the smaller position.
fn nearest(sorted: &[Position], target: Position) -> Position {
    let i = sorted.partition_point(|&p| p < target);
    match (i.checked_sub(1).map(|j| sorted[j]), sorted.get(i).copied()) {
        (Some(lo), Some(hi)) => {
            if target - lo <= hi - target {
                lo
            } else {
                hi
            }
        }
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => unreachable!("occurrence lists are non-empty"),
    }
}

/// Every candidate passage of `doc_id` for `terms`: the full Cartesian product
/// of the per-term occurrence lists, in lexicographic position order.
///
/// All terms must occur in the document and at least two must be given.
pub fn enumerate_passages<S: AsRef<str>>(
    index: &PositionalIndex,
    doc_id: &str,
    terms: &[S],
    budget: &EnumerationBudget,
) -> Result<Vec<Passage>, PassageError> {
    let (occ, absent) = Occurrences::gather(index, doc_id, terms)?;
    if let Some(term) = absent.first() {
        return Err(PassageError::TermAbsent {
            term: term.to_string(),
            doc_id: doc_id.to_string(),
        });
    }
    if occ.terms.len() < 2 {
        return Err(PassageError::TooFewTerms {
            doc_id: doc_id.to_string(),
            present: occ.terms.len(),
        });
    }
    occ.check_budget(budget)?;

    let mut out = Vec::with_capacity(occ.combinations() as usize);
    occ.for_each_tuple(|tuple| out.push(occ.passage(tuple)));
    Ok(out)
}

/// Scores every candidate passage and returns them best first, ties broken by
/// the smaller position tuple. This is the exhaustive reference the `oracle`
/// command prints.
pub fn score_all_passages<S: AsRef<str>>(
    index: &PositionalIndex,
    doc_id: &str,
    terms: &[S],
    params: &ProximityParams,
    budget: &EnumerationBudget,
) -> Result<Vec<(Passage, f64)>, PassageError> {
    let mut scored: Vec<(Passage, f64)> = enumerate_passages(index, doc_id, terms, budget)?
        .into_iter()
        .map(|p| {
            let score = pair_sum(&p.positions(), params.s);
            (p, score)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.positions().cmp(&b.0.positions()))
    });
    Ok(scored)
}

/// Highest-scoring passage of `doc_id` over the query terms present in it.
///
/// Absent terms are skipped, so at least two query terms must occur. Within
/// budget the search is exhaustive; otherwise `budget.on_exceed` decides
/// between an error and the anchor-greedy approximation.
pub fn best_passage<S: AsRef<str>>(
    index: &PositionalIndex,
    doc_id: &str,
    terms: &[S],
    params: &ProximityParams,
    budget: &EnumerationBudget,
) -> Result<BestPassage, PassageError> {
    let (occ, _) = Occurrences::gather(index, doc_id, terms)?;
    if occ.terms.len() < 2 {
        return Err(PassageError::TooFewTerms {
            doc_id: doc_id.to_string(),
            present: occ.terms.len(),
        });
    }
    let (tuple, raw_score, approximate) = match occ.check_budget(budget) {
        Ok(()) => {
            let (t, score) = occ.exact_best(params.s);
            (t, score, false)
        }
        Err(e) => match budget.on_exceed {
            OnExceed::Error => return Err(e),
            OnExceed::Approximate => {
                let (t, score) = occ.anchor_greedy(params.s);
                (t, score, true)
            }
        },
    };
    Ok(BestPassage {
        passage: occ.passage(&tuple),
        raw_score,
        approximate,
    })
}

/// Anchor-greedy search regardless of budget. For each occurrence of each
/// term, every other term takes its occurrence nearest to that anchor; the
/// best resulting passage wins.
pub fn approximate_best_passage<S: AsRef<str>>(
    index: &PositionalIndex,
    doc_id: &str,
    terms: &[S],
    params: &ProximityParams,
) -> Result<BestPassage, PassageError> {
    let (occ, _) = Occurrences::gather(index, doc_id, terms)?;
    if occ.terms.len() < 2 {
        return Err(PassageError::TooFewTerms {
            doc_id: doc_id.to_string(),
            present: occ.terms.len(),
        });
    }
    let (tuple, raw_score) = occ.anchor_greedy(params.s);
    Ok(BestPassage {
        passage: occ.passage(&tuple),
        raw_score,
        approximate: true,
    })
}
