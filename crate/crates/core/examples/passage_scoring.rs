//! The proximity function, passage scores, and exhaustive passage
//! enumeration for one document.
//!
//! Run with `cargo run -p pqr --example passage_scoring`.

use pqr::passage::score_all_passages;
use pqr::{
    best_passage, build_index, cp, enumerate_passages, passage_raw_score, Corpus, Document,
    EnumerationBudget, ProximityParams, TokenizerConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("cp by token distance, s = 1 and s = 5");
    for gap in [1u32, 2, 3, 5, 10, 100, 1000] {
        println!(
            "  |i-j| = {gap:>4}   {:.6}   {:.6}",
            cp(0, gap, 1.0),
            cp(0, gap, 5.0)
        );
    }

    // x at 0 and 5, y at 3 and 6.
    let corpus = Corpus::new(vec![Document::new("doc", "x a b y c x y")])?;
    let index = build_index(&corpus, &TokenizerConfig::default());
    let terms = ["x", "y"];
    let params = ProximityParams::default();
    let budget = EnumerationBudget::default();

    println!("\nevery passage of `doc` for x y:");
    for passage in enumerate_passages(&index, "doc", &terms, &budget)? {
        println!(
            "  {passage:<10} {:.6}",
            passage_raw_score(&passage, &params)?
        );
    }

    println!("\nbest first, ties to the smaller tuple:");
    for (rank, (passage, score)) in score_all_passages(&index, "doc", &terms, &params, &budget)?
        .iter()
        .enumerate()
    {
        println!("  {}. {passage:<10} {score:.6}", rank + 1);
    }

    let best = best_passage(&index, "doc", &terms, &params, &budget)?;
    println!(
        "\nbest passage spans {}..={} with score {:.6}",
        best.passage.span_start(),
        best.passage.span_end(),
        best.raw_score
    );
    Ok(())
}
