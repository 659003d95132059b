//! Picks the exemplars most similar to an input with BM25.
//!
//!     cargo run --example bm25_retrieval -- "la ciudad antigua"

use cipherlang::retrieval::{build_index, ExemplarPool, Side};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let query = std::env::args().nth(1).unwrap_or_else(|| "el gobierno anunció medidas".into());
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/spa/exemplars.jsonl");
    let pool = ExemplarPool::load(path, "spa", "eng")?;
    let index = build_index(&pool, Side::Source)?;
    println!("{} documents, avgdl {:.2}", index.len(), index.avgdl());
    for (id, score) in index.ranked(&query).into_iter().take(3) {
        println!("{score:7.4}  {id}  {}", pool.get(id).map_or("", |e| e.source.as_str()));
    }
    Ok(())
}
