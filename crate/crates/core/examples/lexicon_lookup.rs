//! Fuzzy dictionary lookup: misspelled or inflected words still find their
//! nearest entries, and a lemma can stand in for the surface form.
//!
//!     cargo run --example lexicon_lookup

use cipherlang::lexicon::{Lexicon, LookupParams, Provenance};
use cipherlang::strategies::word_for_word;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/spa/lexicon.tsv");
    let lex = Lexicon::load_tsv(path, "spa", "eng", Provenance::Curated)?;
    let params = LookupParams::default();
    println!("{} entries, k={} cap={} threshold={}", lex.len(), params.k, params.per_match_cap, params.threshold);

    for word in ["ciudad", "ciudades", "gobiernos", "xyzzy"] {
        let hits: Vec<String> =
            lex.lookup(word, &params).iter().map(|m| format!("{} ({:.2}) -> {}", m.matched_key, m.distance, m.targets.join(","))).collect();
        println!("{word:>10}: {}", if hits.is_empty() { "-".into() } else { hits.join("; ") });
    }
    for m in lex.lookup_with_lemma("ganó", "ganar", &params) {
        println!("ganó via lemma: {} -> {}", m.matched_key, m.targets.join(","));
    }
    println!("gloss: {}", word_for_word(&lex, "La ciudad tiene un puerto grande."));
    Ok(())
}
