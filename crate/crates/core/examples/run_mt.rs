//! A full translation run over the fixture set with the offline gloss model:
//! records per strategy, scored samples, and the report table.
//!
//!     cargo run --example run_mt -- spa_base

use cipherlang::runner::{run_mt, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "spa_base".into());
    let path = format!("{}/fixtures/configs/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    let mut cfg = ExperimentConfig::load(path)?;
    cfg.output_dir = std::env::temp_dir().join(format!("cipherlang-example-{name}"));

    let summary = run_mt(&cfg, false)?;
    println!("{} records, {} failed, in {}", summary.written, summary.failures, cfg.output_dir.display());
    if let Some(report) = summary.report {
        print!("{}", report.to_table());
    }
    Ok(())
}
