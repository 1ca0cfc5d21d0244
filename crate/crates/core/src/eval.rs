//! Mean reciprocal rank evaluation over query/judgment sets.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{BaselineError, Bm25Params, VsmModel, WindowBm25};
use crate::index::PositionalIndex;
use crate::passage::EnumerationBudget;
use crate::scoring::{rank_documents, ProximityParams, ScoringError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to read qrels {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed qrels line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("qrels set is empty")]
    EmptyQrels,
    #[error("unknown model `{0}` (expected proximity, vsm or bm25-window)")]
    UnknownModel(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrel {
    pub query: String,
    pub relevant: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QrelSet {
    pub entries: Vec<Qrel>,
}

impl QrelSet {
    pub fn new(entries: Vec<Qrel>) -> Self {
        QrelSet { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads `{"query": "...", "relevant": ["id", ...]}` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let io_err = |source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| EvalError::Malformed {
                line: i + 1,
                message,
            };
            let qrel: Qrel = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            if qrel.query.trim().is_empty() {
                return Err(malformed("empty query".into()));
            }
            if qrel.relevant.is_empty() {
                return Err(malformed("no relevant documents".into()));
            }
            entries.push(qrel);
        }
        Ok(QrelSet { entries })
    }
}

/// `1/r` for the 1-based rank `r` of the first relevant document, 0 if none.
pub fn reciprocal_rank<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<String>) -> f64 {
    first_relevant(ranking, relevant).map_or(0.0, |r| 1.0 / r as f64)
}

fn first_relevant<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<String>) -> Option<usize> {
    ranking
        .iter()
        .position(|id| relevant.contains(id.as_ref()))
        .map(|i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "vsm")]
    Vsm,
    #[serde(rename = "bm25-window")]
    Bm25Window,
    #[serde(rename = "proximity")]
    Proximity,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Vsm, Model::Bm25Window, Model::Proximity];

    pub fn name(self) -> &'static str {
        match self {
            Model::Vsm => "vsm",
            Model::Bm25Window => "bm25-window",
            Model::Proximity => "proximity",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Model::Vsm => "Vector space model (VSM)",
            Model::Bm25Window => "Fixed-window BM25 passages",
            Model::Proximity => "Proximity passage scoring",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| EvalError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelParams {
    pub proximity: ProximityParams,
    pub budget: EnumerationBudget,
    pub bm25: Bm25Params,
}

/// A ready-to-query model bound to one index.
pub enum Ranker<'a> {
    Vsm(VsmModel<'a>),
    Bm25Window(WindowBm25<'a>),
    Proximity {
        index: &'a PositionalIndex,
        params: ProximityParams,
        budget: EnumerationBudget,
    },
}

impl<'a> Ranker<'a> {
    pub fn new(
        index: &'a PositionalIndex,
        model: Model,
        params: &ModelParams,
    ) -> Result<Self, EvalError> {
        Ok(match model {
            Model::Vsm => Ranker::Vsm(VsmModel::new(index)),
            Model::Bm25Window => Ranker::Bm25Window(WindowBm25::new(index, params.bm25)?),
            Model::Proximity => {
                params.proximity.validate()?;
                Ranker::Proximity {
                    index,
                    params: params.proximity,
                    budget: params.budget,
                }
            }
        })
    }

    /// Ranked doc ids for already-tokenized, deduplicated terms.
    pub fn ranked_ids(&self, terms: &[String], k: usize) -> Result<Vec<String>, EvalError> {
        if terms.is_empty() {
            return Ok(Vec::new());
        }
        Ok(match self {
            Ranker::Vsm(m) => m.rank(terms, k).into_iter().map(|r| r.0).collect(),
            Ranker::Bm25Window(m) => m.rank(terms, k).into_iter().map(|r| r.0).collect(),
            Ranker::Proximity {
                index,
                params,
                budget,
            } => rank_documents(index, terms, params, budget, k)?
                .into_iter()
                .map(|r| r.doc_id)
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query: String,
    /// 1-based rank of the first relevant document within the cutoff.
    pub rank: Option<usize>,
    pub reciprocal_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: Model,
    pub cutoff: usize,
    pub mrr: f64,
    pub num_queries: usize,
    pub num_unanswered: usize,
    /// Judged doc ids that are not in the index.
    pub missing_relevant: usize,
    pub per_query: Vec<QueryOutcome>,
}

/// Runs every query through `model` with cutoff `k` and averages the
/// reciprocal ranks. Unanswered queries count as 0.
pub fn run_eval(
    index: &PositionalIndex,
    qrels: &QrelSet,
    model: Model,
    params: &ModelParams,
    k: usize,
) -> Result<EvalReport, EvalError> {
    if qrels.is_empty() {
        return Err(EvalError::EmptyQrels);
    }
    let ranker = Ranker::new(index, model, params)?;

    let outcomes: Vec<Result<QueryOutcome, EvalError>> = qrels
        .entries
        .par_iter()
        .map(|q| {
            let terms = index.query_terms(&q.query);
            let ranking = ranker.ranked_ids(&terms, k)?;
            let rank = first_relevant(&ranking, &q.relevant);
            Ok(QueryOutcome {
                query: q.query.clone(),
                rank,
                reciprocal_rank: rank.map_or(0.0, |r| 1.0 / r as f64),
            })
        })
        .collect();
    let per_query = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let missing_relevant = qrels
        .entries
        .iter()
        .flat_map(|q| &q.relevant)
        .filter(|id| !index.contains_doc(id))
        .count();
    let num_queries = per_query.len();
    let num_unanswered = per_query.iter().filter(|o| o.rank.is_none()).count();
    let mrr = per_query.iter().map(|o| o.reciprocal_rank).sum::<f64>() / num_queries as f64;

    Ok(EvalReport {
        model,
        cutoff: k,
        mrr,
        num_queries,
        num_unanswered,
        missing_relevant,
        per_query,
    })
}

/// Two-column model / MRR table.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.model.label().len())
        .chain(["Retrieval model".len()])
        .max()
        .unwrap_or(0);
    let mut out = format!("{:<width$}  MRR\n", "Retrieval model");
    for r in reports {
        out.push_str(&format!("{:<width$}  {:.4}\n", r.model.label(), r.mrr));
    }
    out
}
