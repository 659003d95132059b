//! Asks the model to name the hidden language and undo the cipher, then
//! checks how much plaintext it recovered. The echo mock recovers nothing.
//!
//!     cargo run --example probe

use cipherlang::runner::{probe, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/configs/spa_base.toml"))?;
    cfg.output_dir = std::env::temp_dir().join("cipherlang-example-probe");
    cfg.override_backend("mock:echo")?;
    cfg.limit = 5;
    for r in probe(&cfg)? {
        println!(
            "{}  language={:?}  decipher BLEU {:.2}  leaks {}  {}",
            r.sample_id,
            r.guessed_language,
            r.decipher_bleu,
            r.leaks.len(),
            r.parse_failure.as_deref().unwrap_or("")
        );
    }
    Ok(())
}
