//! Compare proximity ranking with the VSM and fixed-window BM25 baselines.
//! Two terms 400 tokens apart never share a 300-token window, so BM25 over
//! windows cannot tell that document from ones holding a single term.
//!
//! Run with `cargo run -p pqr --example baselines`.

use pqr::baselines::window_count;
use pqr::{
    bm25_window_rank, build_index, rank_documents, vsm_rank, Bm25Params, Corpus, Document,
    EnumerationBudget, ProximityParams, TokenizerConfig,
};

fn filler(n: usize, tag: &str) -> Vec<String> {
    (0..n).map(|i| format!("{tag}{}", i % 37)).collect()
}

fn doc_with(at: &[(usize, &str)], len: usize, tag: &str) -> String {
    let mut words = filler(len, tag);
    for &(pos, term) in at {
        words[pos] = term.to_string();
    }
    words.join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::new(vec![
        Document::new(
            "near",
            doc_with(&[(100, "jangsu"), (102, "pyongyang")], 600, "n"),
        ),
        Document::new(
            "far",
            doc_with(&[(100, "jangsu"), (500, "pyongyang")], 600, "f"),
        ),
        Document::new("only-x", doc_with(&[(100, "jangsu")], 600, "x")),
        Document::new("only-y", doc_with(&[(500, "pyongyang")], 600, "y")),
    ])?;
    let index = build_index(&corpus, &TokenizerConfig::default());
    let terms = ["jangsu", "pyongyang"];

    let bm25 = Bm25Params::default();
    println!(
        "a 600-token document splits into {} windows of {} (stride {})\n",
        window_count(600, bm25.window_tokens, bm25.window_stride),
        bm25.window_tokens,
        bm25.window_stride
    );

    println!("vsm (ignores positions):");
    for (id, score) in vsm_rank(&index, &terms, 10) {
        println!("  {id:<8} {score:.4}");
    }

    println!("bm25 over windows:");
    for (id, score) in bm25_window_rank(&index, &terms, &bm25, 10)? {
        println!("  {id:<8} {score:.4}");
    }

    println!("proximity:");
    for r in rank_documents(
        &index,
        &terms,
        &ProximityParams::default(),
        &EnumerationBudget::default(),
        10,
    )? {
        println!("  {:<8} {:.4}", r.doc_id, r.raw_score);
    }
    Ok(())
}
