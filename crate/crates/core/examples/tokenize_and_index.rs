//! Tokenize a few documents, build a positional index, query it, and
//! round-trip it through disk.
//!
//! Run with `cargo run -p pqr --example tokenize_and_index`.

use pqr::{
    build_index, load_index, save_index, tokenize, CandidateMode, Corpus, Document, TokenizerConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = TokenizerConfig::default().with_stopwords(["the", "of", "in"]);

    // Stopwords are dropped but keep their slot, so distances stay honest.
    let stream = tokenize("The capital of Goguryeo moved in 427.", &cfg);
    for (term, pos) in stream.iter() {
        println!("{pos:>2}  {term}");
    }
    println!("token_count = {}\n", stream.token_count);

    let corpus = Corpus::new(vec![
        Document::new("d1", "Jumong founded Goguryeo, and the kingdom grew."),
        Document::new("d2", "Goguryeo moved its capital to Pyongyang."),
        Document::new(
            "d3",
            "Pyongyang, later a capital, lies on the Taedong river.",
        )
        .with_title("Geography"),
    ])?;
    let index = build_index(&corpus, &cfg);
    println!(
        "{} documents, {} terms",
        index.doc_count(),
        index.term_count()
    );

    for doc in ["d1", "d2"] {
        println!(
            "positions of goguryeo in {doc}: {:?}",
            index.positions_of("goguryeo", doc)?
        );
    }

    let terms = index.query_terms("Goguryeo Pyongyang capital");
    println!("query terms: {terms:?}");
    println!(
        "strict:  {:?}",
        index.candidate_documents(&terms, CandidateMode::Strict)
    );
    println!(
        "relaxed: {:?}",
        index.candidate_documents(&terms, CandidateMode::Relaxed)
    );

    let dir = std::env::temp_dir().join(format!("pqr-example-{}", std::process::id()));
    save_index(&index, &dir)?;
    let reloaded = load_index(&dir)?;
    println!(
        "\nsaved to {} and reloaded: {} documents, version {}",
        dir.display(),
        reloaded.doc_count(),
        reloaded.version()
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
