//! Parses a judge's GEMBA-style error list and turns it into an MQM penalty.
//!
//!     cargo run --example mqm

use cipherlang::metrics::{mqm_score, parse_gemba};

const ANSWER: &str = "\
Critical:
no-error
Major:
accuracy/mistranslation - \"fell\"
Minor:
fluency/grammar - \"a apple\"
fluency/punctuation - \"..\"
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let annotation = parse_gemba(ANSWER)?;
    let score = mqm_score(&annotation);
    println!("{} errors, penalty {}", annotation.errors.len(), score.total);
    println!("capped by group   {:?}", score.capped);
    println!("uncapped by group {:?}", score.uncapped);

    let critical = parse_gemba("Critical:\naccuracy/addition - \"never\"\n")?;
    println!("one critical error: {}", mqm_score(&critical).total);
    Ok(())
}
