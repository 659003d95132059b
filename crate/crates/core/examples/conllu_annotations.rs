//! Reads tagger output (CoNLL-U plus an entity span file) and shows the
//! morphology lines a prompt would carry, before and after ciphering.
//!
//!     cargo run --example conllu_annotations

use cipherlang::annotations::{attach_ne_spans, parse_conllu_str, AnnotationSet};
use cipherlang::cipher::build_map;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/sidecar");
    let mut sentences = parse_conllu_str(&std::fs::read_to_string(format!("{dir}/annotate.conllu"))?)?;
    let unmatched = attach_ne_spans(&mut sentences, &std::fs::read_to_string(format!("{dir}/ne_spans.tsv"))?)?;
    println!("{} sentences, {} unmatched span ids", sentences.len(), unmatched.len());

    let set = AnnotationSet::new("spa", sentences);
    let s = &set.sentences[0];
    println!("{}  {}", s.sentence_id, s.reconstruct_text());
    for t in &s.tokens {
        println!("  {}: POS: {}, Lemma: {}, Features: {}", t.surface, t.upos, t.lemma, t.feats_string());
    }
    for span in &s.ne_spans {
        println!("  entity {} [{}..{}) {}", span.label, span.start, span.end, span.entity);
    }

    let ciphered = set.ciphered(&build_map("spa", 7, None)?);
    println!("ciphered: {}", ciphered.sentences[0].reconstruct_text());
    Ok(())
}
