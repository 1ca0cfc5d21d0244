//! Mean reciprocal rank of every model over the bundled sample corpus
//! and qrels in `examples/data`.
//!
//! Run with `cargo run -p pqr --example mrr_eval`.

use std::path::Path;

use pqr::eval::{render_table, Model};
use pqr::{
    build_index, load_corpus, run_eval, CandidateMode, ModelParams, ProximityParams, QrelSet,
    TokenizerConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let stopwords = std::fs::read_to_string(data.join("stopwords.txt"))?;
    let cfg = TokenizerConfig::default().with_stopwords(stopwords.lines());

    let corpus = load_corpus(data.join("corpus.jsonl"))?;
    let index = build_index(&corpus, &cfg);
    let qrels = QrelSet::load(data.join("qrels.jsonl"))?;

    for mode in [CandidateMode::Strict, CandidateMode::Relaxed] {
        let params = ModelParams {
            proximity: ProximityParams::new(1.0, mode)?,
            ..Default::default()
        };
        let reports = Model::ALL
            .iter()
            .map(|&m| run_eval(&index, &qrels, m, &params, 10))
            .collect::<Result<Vec<_>, _>>()?;
        println!("proximity candidates: {mode:?}");
        println!("{}", render_table(&reports));

        let proximity = reports
            .iter()
            .find(|r| r.model == Model::Proximity)
            .unwrap();
        for q in proximity.per_query.iter().filter(|q| q.rank != Some(1)) {
            println!(
                "  not first for proximity: {:<28} rank {:?}",
                q.query, q.rank
            );
        }
        println!();
    }
    Ok(())
}
