//! Attaches scores computed outside the crate (one JSON line per sample and
//! metric) to a finished run and re-aggregates the report.
//!
//!     cargo run --example external_scores

use cipherlang::runner::{report, run_mt, score, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = env!("CARGO_MANIFEST_DIR");
    let mut cfg = ExperimentConfig::load(format!("{root}/fixtures/configs/spa_sanity.toml"))?;
    cfg.output_dir = std::env::temp_dir().join("cipherlang-example-scores");
    run_mt(&cfg, false)?;
    let ingest = score(&cfg, format!("{root}/fixtures/sidecar/scores.jsonl").as_ref())?;
    println!("attached {}, unmatched {:?}", ingest.attached, ingest.unmatched);
    print!("{}", report(&cfg)?.to_table());
    Ok(())
}
