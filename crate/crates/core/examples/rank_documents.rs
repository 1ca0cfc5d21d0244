//! Rank documents by their best passage: strict versus relaxed candidates,
//! the effect of `s`, single-term fallback, and the enumeration budget.
//!
//! Run with `cargo run -p pqr --example rank_documents`.

use pqr::{
    build_index, rank_documents, CandidateMode, Corpus, Document, EnumerationBudget, OnExceed,
    ProximityParams, ScoredResult, TokenizerConfig,
};

fn show(label: &str, results: &[ScoredResult]) {
    println!("{label}");
    for (i, r) in results.iter().enumerate() {
        let span = r.best_passage.as_ref().map_or("-".to_string(), |p| {
            format!("{}..={}", p.span_start(), p.span_end())
        });
        println!(
            "  {}. {:<8} raw {:.4}  norm {:.4}  span {span}{}{}",
            i + 1,
            r.doc_id,
            r.raw_score,
            r.norm_score,
            if r.approximate { "  (approx)" } else { "" },
            if r.fallback { "  (tf)" } else { "" },
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::new(vec![
        Document::new("close", "king sejong created the alphabet for the people"),
        Document::new(
            "apart",
            "king sejong ruled long and much later scholars wrote about the new alphabet",
        ),
        Document::new("partial", "the alphabet has twenty four letters"),
        Document::new("absent", "turtle ships fought at hansan island"),
    ])?;
    let index = build_index(&corpus, &TokenizerConfig::default());
    let terms = index.query_terms("sejong alphabet");
    let budget = EnumerationBudget::default();

    show(
        "strict, s = 1",
        &rank_documents(&index, &terms, &ProximityParams::default(), &budget, 10)?,
    );
    show(
        "strict, s = 5",
        &rank_documents(
            &index,
            &terms,
            &ProximityParams::new(5.0, CandidateMode::Strict)?,
            &budget,
            10,
        )?,
    );

    let three = index.query_terms("king sejong alphabet");
    show(
        "relaxed, three terms",
        &rank_documents(
            &index,
            &three,
            &ProximityParams::new(1.0, CandidateMode::Relaxed)?,
            &budget,
            10,
        )?,
    );

    show(
        "single term",
        &rank_documents(
            &index,
            &["alphabet"],
            &ProximityParams::default(),
            &budget,
            10,
        )?,
    );

    // Many occurrences of each term blow past a small budget.
    let busy = "a b ".repeat(40);
    let busy = Corpus::new(vec![Document::new("busy", busy)])?;
    let busy = build_index(&busy, &TokenizerConfig::default());
    let tight = EnumerationBudget::new(100, OnExceed::Error);
    match rank_documents(&busy, &["a", "b"], &ProximityParams::default(), &tight, 10) {
        Ok(_) => println!("unexpectedly within budget"),
        Err(e) => println!("budget 100, on_exceed = error: {e}"),
    }
    let lenient = EnumerationBudget::new(100, OnExceed::Approximate);
    show(
        "budget 100, on_exceed = approximate",
        &rank_documents(
            &busy,
            &["a", "b"],
            &ProximityParams::default(),
            &lenient,
            10,
        )?,
    );
    Ok(())
}
