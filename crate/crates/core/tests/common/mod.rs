//! Test-only reference implementations. Nothing here calls into the
//! library's scoring or passage code, so they can serve as oracles for it.

#![allow(dead_code)]

use std::collections::BTreeMap;

use pqr::{tokenize, Corpus, Document, TokenizerConfig};
use rand::rngs::StdRng;
use rand::Rng;

/// Proximity computed straight from the closed form, via `ln` instead of `ln_1p`.
pub fn ref_cp(a: u32, b: u32, s: f64) -> f64 {
    let gap = (i64::from(a) - i64::from(b)).abs() - 1;
    let gap = gap.max(0) as f64;
    1.0 / (1.0 + s * (1.0 + gap).ln())
}

pub fn ref_passage_score(positions: &[u32], s: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            total += ref_cp(positions[i], positions[j], s);
        }
    }
    total
}

/// Term -> positions by a linear scan of the token stream.
pub fn scan_positions(text: &str, cfg: &TokenizerConfig) -> BTreeMap<String, Vec<u32>> {
    let mut out: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for tok in tokenize(text, cfg).tokens {
        out.entry(tok.term).or_default().push(tok.position);
    }
    out
}

/// Every position tuple of the Cartesian product, recursively, in
/// lexicographic order.
pub fn all_tuples(lists: &[Vec<u32>]) -> Vec<Vec<u32>> {
    fn go(lists: &[Vec<u32>], prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        match lists.split_first() {
            None => out.push(prefix.clone()),
            Some((head, rest)) => {
                for &p in head {
                    prefix.push(p);
                    go(rest, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(lists, &mut Vec::new(), &mut out);
    out
}

/// Brute-force best tuple for sorted distinct `terms` present in `text`:
/// maximum score, ties (within 1e-12) to the smallest tuple.
pub fn brute_force_best(text: &str, terms: &[String], s: f64) -> (Vec<u32>, f64) {
    let positions = scan_positions(text, &TokenizerConfig::default());
    let lists: Vec<Vec<u32>> = terms.iter().map(|t| positions[t].clone()).collect();
    let scored: Vec<(Vec<u32>, f64)> = all_tuples(&lists)
        .into_iter()
        .map(|t| {
            let sc = ref_passage_score(&t, s);
            (t, sc)
        })
        .collect();
    let max = scored.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    scored
        .into_iter()
        .filter(|x| x.1 >= max - 1e-12)
        .min_by(|a, b| a.0.cmp(&b.0))
        .unwrap()
}

pub fn word(i: usize) -> String {
    format!("w{i}")
}

pub fn random_text(rng: &mut StdRng, vocab: usize, len: usize) -> String {
    (0..len)
        .map(|_| word(rng.gen_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn corpus_of(texts: &[(String, String)]) -> Corpus {
    Corpus::new(
        texts
            .iter()
            .map(|(id, t)| Document::new(id.as_str(), t.as_str()))
            .collect(),
    )
    .unwrap()
}
