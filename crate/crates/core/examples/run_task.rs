//! Ciphered NLI solved directly and through an English translation first.
//! The mock answers with the gold label, so both reach 1.0; the cascade
//! costs two model calls per item.
//!
//!     cargo run --example run_task

use cipherlang::runner::{run_task, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/configs/spa_nli.toml"))?;
    cfg.output_dir = std::env::temp_dir().join("cipherlang-example-nli");
    for r in run_task(&cfg, false)?.reports {
        println!(
            "{} {:>13}: accuracy {:.3} ({}/{}), calls per item {}",
            r.task, r.strategy, r.accuracy, r.correct, r.count, r.calls_per_item
        );
    }
    Ok(())
}
