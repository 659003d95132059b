//! Builds a seeded cipher and moves text in and out of it.
//!
//!     cargo run --example cipher -- deu 7 "Dies ist ein Beispielsatz."

use cipherlang::cipher::build_map;
use cipherlang::text::normalize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let lang = args.next().unwrap_or_else(|| "spa".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let text = normalize(&args.next().unwrap_or_else(|| "Esta es una frase de ejemplo.".into()));

    let map = build_map(&lang, seed, None)?;
    let ciphered = map.apply(&text);
    println!("language  {} ({lang}, seed {seed})", map.cl_name());
    println!("plain     {text}");
    println!("ciphered  {ciphered}");
    println!("inverted  {}", map.invert(&ciphered));
    Ok(())
}
