//! Sentence and corpus chrF and BLEU.
//!
//!     cargo run --example metrics

use cipherlang::metrics::{bleu, chrf, corpus_bleu, corpus_chrf};

fn main() {
    let pairs = [
        ("The cat sat on the mat.", "The cat sat on the mat."),
        ("A cat was sitting on the mat.", "The cat sat on the mat."),
        ("The government announced new measures.", "The government announced new economic measures on Monday."),
        ("I do not understand this language.", "The river crosses the old town."),
    ];
    println!("{:>7} {:>7}  hypothesis", "chrF", "BLEU");
    for (h, r) in pairs {
        println!("{:7.2} {:7.2}  {h}", chrf(h, r), bleu(h, r));
    }
    println!("{:7.2} {:7.2}  corpus", corpus_chrf(pairs), corpus_bleu(pairs));
}
