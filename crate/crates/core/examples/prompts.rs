//! Renders the prompt one strategy would send for one test sentence.
//!
//!     cargo run --example prompts -- LELemMS wn14

use cipherlang::runner::{load_materials, ExperimentConfig};
use cipherlang::strategies::{Assembler, Direction, StrategyConfig, StrategyName};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name: StrategyName = args.next().as_deref().unwrap_or("LE").parse()?;
    let id = args.next().unwrap_or_else(|| "wn14".into());

    let cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/configs/spa_base.toml"))?;
    let m = load_materials(&cfg)?;
    let sample = m.test_set.get(&id).ok_or("no such sample")?;
    let assembler = Assembler::new(&m.ciphered, &m.map, &m.templates);
    let scfg = StrategyConfig::preset(name, Direction::ToEnglish);

    if name == StrategyName::LStr {
        println!("{}", assembler.word_for_word(&scfg, &sample.source)?);
        return Ok(());
    }
    let prompt = assembler.mt_prompt(&scfg, &sample.id, &sample.source)?;
    let sections: Vec<&str> = prompt.section_names().iter().map(|s| s.as_str()).collect();
    eprintln!("{name}: {} | sha256 {}", sections.join(", "), prompt.hash());
    println!("{}", prompt.full_prompt);
    Ok(())
}
