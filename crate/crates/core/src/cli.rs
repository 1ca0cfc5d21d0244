//! Command-line front end for the `pqr` binary.
//!
//! Settings resolve as flag, then config file (`--config`, flat `key=value`),
//! then built-in default. The index directory may also come from the
//! `PQR_INDEX` environment variable, consulted after the config file.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 enumeration budget
//! exceeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::baselines::Bm25Params;
use crate::corpus::{load_corpus, TokenizerConfig};
use crate::eval::{
    render_table, run_eval, EvalError, EvalReport, Model, ModelParams, QrelSet, Ranker,
};
use crate::index::{build_index, load_index, save_index, CandidateMode, PositionalIndex};
use crate::passage::{score_all_passages, EnumerationBudget, OnExceed, PassageError};
use crate::scoring::{rank_documents, ProximityParams, ScoringError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const INDEX_ENV: &str = "PQR_INDEX";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Budget(String),
    #[error("failed to write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) => EXIT_BUDGET,
            _ => EXIT_INPUT,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

impl From<PassageError> for CliError {
    fn from(e: PassageError) -> Self {
        match e {
            PassageError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => input(other),
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::Passage(p) => p.into(),
            other => input(other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Scoring(s) => s.into(),
            other => input(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pqr", version, about = "Passage-proximity document retrieval")]
pub struct Cli {
    /// Flat key=value settings file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and persist a positional index from a JSON-lines corpus.
    Build(BuildArgs),
    /// Rank documents for a query.
    Search(SearchArgs),
    /// Evaluate models with mean reciprocal rank.
    Eval(EvalArgs),
    /// Print every candidate passage of one document with its score.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Comma-separated stopword list.
    #[arg(long, value_delimiter = ',')]
    pub stopwords: Vec<String>,
    /// File with one stopword per line.
    #[arg(long)]
    pub stopwords_file: Option<PathBuf>,
    #[arg(long)]
    pub no_lowercase: bool,
    #[arg(long)]
    pub min_token_len: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Proximity,
    Vsm,
    #[value(name = "bm25-window")]
    Bm25Window,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Proximity => Model::Proximity,
            ModelArg::Vsm => Model::Vsm,
            ModelArg::Bm25Window => Model::Bm25Window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnExceedArg {
    Error,
    Approximate,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RankFlags {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Distance weight of the proximity function.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Result cutoff.
    #[arg(long)]
    pub k: Option<usize>,
    /// Maximum candidate passages enumerated per document.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum)]
    pub on_exceed: Option<OnExceedArg>,
    /// BM25 window size in tokens.
    #[arg(long)]
    pub window: Option<u32>,
    /// BM25 window stride in tokens (default: half the window).
    #[arg(long)]
    pub stride: Option<u32>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchFormat {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub query: String,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[command(flatten)]
    pub rank: RankFlags,
    #[arg(long, value_enum)]
    pub format: Option<SearchFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Evaluate every model and print one row per model.
    #[arg(long, conflicts_with = "model")]
    pub all_models: bool,
    #[command(flatten)]
    pub rank: RankFlags,
    #[arg(long, value_enum)]
    pub format: Option<EvalFormat>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub query: String,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub doc: String,
    #[command(flatten)]
    pub rank: RankFlags,
    #[arg(long, value_enum)]
    pub format: Option<SearchFormat>,
}

/// Settings read from a `key=value` file. `#` starts a comment line.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "index",
    "corpus",
    "qrels",
    "model",
    "s",
    "mode",
    "k",
    "budget",
    "on_exceed",
    "window",
    "stride",
    "k1",
    "b",
    "format",
    "stopwords",
    "lowercase",
    "min_token_len",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| input(format!("config line {}: expected key=value", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(input(format!("config line {}: unknown key `{key}`", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| input(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    fn value_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| T::from_str(v, false).map_err(|e| input(format!("config key `{key}`: {e}"))))
            .transpose()
    }
}

/// Fully resolved ranking settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub model: Model,
    pub params: ModelParams,
    pub k: usize,
}

pub fn resolve(flags: &RankFlags, cfg: &ConfigFile) -> Result<Resolved, CliError> {
    let model: Model = match flags.model {
        Some(m) => m,
        None => cfg.value_enum("model")?.unwrap_or(ModelArg::Proximity),
    }
    .into();
    let s = flags
        .s
        .map_or_else(|| cfg.parsed("s"), |v| Ok(Some(v)))?
        .unwrap_or(1.0);
    let mode = match flags
        .mode
        .map_or_else(|| cfg.value_enum("mode"), |v| Ok(Some(v)))?
    {
        Some(ModeArg::Relaxed) => CandidateMode::Relaxed,
        _ => CandidateMode::Strict,
    };
    let k = flags
        .k
        .map_or_else(|| cfg.parsed("k"), |v| Ok(Some(v)))?
        .unwrap_or(10);
    if k == 0 {
        return Err(input("k must be at least 1"));
    }
    let max_combinations = flags
        .budget
        .map_or_else(|| cfg.parsed("budget"), |v| Ok(Some(v)))?
        .unwrap_or(EnumerationBudget::default().max_combinations);
    if max_combinations == 0 {
        return Err(input("budget must be at least 1"));
    }
    let on_exceed = match flags
        .on_exceed
        .map_or_else(|| cfg.value_enum("on_exceed"), |v| Ok(Some(v)))?
    {
        Some(OnExceedArg::Approximate) => OnExceed::Approximate,
        _ => OnExceed::Error,
    };

    let mut bm25 = Bm25Params::default();
    if let Some(w) = flags
        .window
        .map_or_else(|| cfg.parsed("window"), |v| Ok(Some(v)))?
    {
        bm25 = Bm25Params::with_window(w);
    }
    if let Some(st) = flags
        .stride
        .map_or_else(|| cfg.parsed("stride"), |v| Ok(Some(v)))?
    {
        bm25.window_stride = st;
    }
    if let Some(k1) = flags.k1.map_or_else(|| cfg.parsed("k1"), |v| Ok(Some(v)))? {
        bm25.k1 = k1;
    }
    if let Some(b) = flags.b.map_or_else(|| cfg.parsed("b"), |v| Ok(Some(v)))? {
        bm25.b = b;
    }
    bm25.validate().map_err(input)?;

    let proximity = ProximityParams::new(s, mode).map_err(input)?;
    Ok(Resolved {
        model,
        params: ModelParams {
            proximity,
            budget: EnumerationBudget::new(max_combinations, on_exceed),
            bm25,
        },
        k,
    })
}

fn index_dir(flag: &Option<PathBuf>, cfg: &ConfigFile) -> Result<PathBuf, CliError> {
    flag.clone()
        .or_else(|| cfg.get("index").map(PathBuf::from))
        .or_else(|| std::env::var_os(INDEX_ENV).map(PathBuf::from))
        .ok_or_else(|| {
            input(format!(
                "no index directory: pass --index or set {INDEX_ENV}"
            ))
        })
}

fn open_index(flag: &Option<PathBuf>, cfg: &ConfigFile) -> Result<PositionalIndex, CliError> {
    let dir = index_dir(flag, cfg)?;
    load_index(&dir).map_err(|e| input(format!("cannot load index {}: {e}", dir.display())))
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Build(args) => cmd_build(args, &cfg, out),
        Command::Search(args) => cmd_search(args, &cfg, out),
        Command::Eval(args) => cmd_eval(args, &cfg, out),
        Command::Oracle(args) => cmd_oracle(args, &cfg, out),
    }
}

pub fn cmd_build(args: &BuildArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus_path = args
        .corpus
        .clone()
        .or_else(|| cfg.get("corpus").map(PathBuf::from))
        .ok_or_else(|| input("no corpus: pass --corpus"))?;
    let dir = index_dir(&args.index, cfg)?;

    let mut stopwords: Vec<String> = if args.stopwords.is_empty() {
        cfg.get("stopwords")
            .map(|s| s.split(',').map(|w| w.trim().to_string()).collect())
            .unwrap_or_default()
    } else {
        args.stopwords.clone()
    };
    if let Some(path) = &args.stopwords_file {
        let text = fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        stopwords.extend(text.lines().map(|l| l.trim().to_string()));
    }
    let lowercase = if args.no_lowercase {
        false
    } else {
        cfg.parsed("lowercase")?.unwrap_or(true)
    };
    let min_len = match args.min_token_len {
        Some(n) => n,
        None => cfg.parsed("min_token_len")?.unwrap_or(1),
    };
    if min_len == 0 {
        return Err(input("min-token-len must be at least 1"));
    }
    let tokenizer = TokenizerConfig::default()
        .with_lowercase(lowercase)
        .with_min_token_len(min_len)
        .with_stopwords(stopwords);

    let corpus = load_corpus(&corpus_path).map_err(input)?;
    let index = build_index(&corpus, &tokenizer);
    save_index(&index, &dir).map_err(input)?;
    writeln!(
        out,
        "{} documents, {} terms",
        index.doc_count(),
        index.term_count()
    )?;
    Ok(())
}

fn search_format(flag: Option<SearchFormat>, cfg: &ConfigFile) -> Result<SearchFormat, CliError> {
    Ok(match flag {
        Some(f) => f,
        None => cfg.value_enum("format")?.unwrap_or(SearchFormat::Tsv),
    })
}

pub fn cmd_search(
    args: &SearchArgs,
    cfg: &ConfigFile,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let settings = resolve(&args.rank, cfg)?;
    let format = search_format(args.format, cfg)?;
    let index = open_index(&args.index, cfg)?;
    let terms = index.query_terms(&args.query);
    if terms.is_empty() {
        return Err(input("query has no indexable terms"));
    }

    let rows: Vec<serde_json::Value> = match settings.model {
        Model::Proximity => {
            let p = &settings.params;
            rank_documents(&index, &terms, &p.proximity, &p.budget, settings.k)?
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let span = r
                        .best_passage
                        .as_ref()
                        .map(|bp| [bp.span_start(), bp.span_end()]);
                    let passage = r.best_passage.as_ref().map(|bp| bp.choices.clone());
                    json!({
                        "rank": i + 1,
                        "doc_id": r.doc_id,
                        "raw_score": r.raw_score,
                        "norm_score": r.norm_score,
                        "span": span,
                        "passage": passage,
                        "approximate": r.approximate,
                        "fallback": r.fallback,
                    })
                })
                .collect()
        }
        model => {
            let ranker = Ranker::new(&index, model, &settings.params)?;
            let scored = match &ranker {
                Ranker::Vsm(m) => m.rank(&terms, settings.k),
                Ranker::Bm25Window(m) => m.rank(&terms, settings.k),
                Ranker::Proximity { .. } => unreachable!("handled above"),
            };
            scored
                .into_iter()
                .enumerate()
                .map(|(i, (doc_id, score))| json!({ "rank": i + 1, "doc_id": doc_id, "score": score }))
                .collect()
        }
    };

    match format {
        SearchFormat::Json => {
            let doc = json!({
                "model": settings.model.name(),
                "query": args.query,
                "terms": terms,
                "results": rows,
            });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("json values serialize")
            )?;
        }
        SearchFormat::Tsv => write_search_tsv(settings.model, &rows, out)?,
    }
    Ok(())
}

fn write_search_tsv(
    model: Model,
    rows: &[serde_json::Value],
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let cell = |v: &serde_json::Value| match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => "-".to_string(),
        other => other.to_string(),
    };
    if model == Model::Proximity {
        writeln!(
            out,
            "rank\tdoc_id\traw_score\tnorm_score\tspan_start\tspan_end\tapproximate\tfallback"
        )?;
        for r in rows {
            let (start, end) = match r["span"].as_array() {
                Some(span) => (span[0].to_string(), span[1].to_string()),
                None => ("-".to_string(), "-".to_string()),
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{start}\t{end}\t{}\t{}",
                cell(&r["rank"]),
                cell(&r["doc_id"]),
                cell(&r["raw_score"]),
                cell(&r["norm_score"]),
                cell(&r["approximate"]),
                cell(&r["fallback"]),
            )?;
        }
    } else {
        writeln!(out, "rank\tdoc_id\tscore")?;
        for r in rows {
            writeln!(
                out,
                "{}\t{}\t{}",
                cell(&r["rank"]),
                cell(&r["doc_id"]),
                cell(&r["score"])
            )?;
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct EvalOutput<'a> {
    reports: &'a [EvalReport],
}

pub fn cmd_eval(args: &EvalArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = resolve(&args.rank, cfg)?;
    let format = match args.format {
        Some(f) => f,
        None => cfg.value_enum("format")?.unwrap_or(EvalFormat::Table),
    };
    let qrels_path = args
        .qrels
        .clone()
        .or_else(|| cfg.get("qrels").map(PathBuf::from))
        .ok_or_else(|| input("no qrels: pass --qrels"))?;
    let index = open_index(&args.index, cfg)?;
    let qrels = QrelSet::load(&qrels_path)?;

    let models: Vec<Model> = if args.all_models {
        Model::ALL.to_vec()
    } else {
        vec![settings.model]
    };
    let reports = models
        .into_iter()
        .map(|m| run_eval(&index, &qrels, m, &settings.params, settings.k))
        .collect::<Result<Vec<_>, _>>()?;

    let json = serde_json::to_string_pretty(&EvalOutput { reports: &reports })
        .expect("reports serialize")
        + "\n";
    if let Some(path) = &args.json_out {
        fs::write(path, &json)
            .map_err(|e| input(format!("cannot write {}: {e}", path.display())))?;
    }
    match format {
        EvalFormat::Json => out.write_all(json.as_bytes())?,
        EvalFormat::Table => {
            out.write_all(render_table(&reports).as_bytes())?;
            if let Some(r) = reports.first() {
                writeln!(
                    out,
                    "\n{} queries, {} unanswered, {} judged documents missing from the index, cutoff {}",
                    r.num_queries, r.num_unanswered, r.missing_relevant, r.cutoff
                )?;
            }
        }
    }
    Ok(())
}

pub fn cmd_oracle(
    args: &OracleArgs,
    cfg: &ConfigFile,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let settings = resolve(&args.rank, cfg)?;
    let format = search_format(args.format, cfg)?;
    let index = open_index(&args.index, cfg)?;
    let terms = index.query_terms(&args.query);
    let p = &settings.params;
    let rows = score_all_passages(&index, &args.doc, &terms, &p.proximity, &p.budget)?;

    match format {
        SearchFormat::Json => {
            let rows: Vec<_> = rows
                .iter()
                .enumerate()
                .map(|(i, (passage, score))| {
                    json!({
                        "rank": i + 1,
                        "score": score,
                        "span": [passage.span_start(), passage.span_end()],
                        "passage": passage.choices,
                    })
                })
                .collect();
            let doc =
                json!({ "doc_id": args.doc, "terms": terms, "s": p.proximity.s, "passages": rows });
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("json values serialize")
            )?;
        }
        SearchFormat::Tsv => {
            writeln!(out, "rank\tscore\tspan_start\tspan_end\tpassage")?;
            for (i, (passage, score)) in rows.iter().enumerate() {
                writeln!(
                    out,
                    "{}\t{score}\t{}\t{}\t{passage}",
                    i + 1,
                    passage.span_start(),
                    passage.span_end()
                )?;
            }
        }
    }
    Ok(())
}
