//! The model gateway offline: mock policies, the response cache, and replay
//! of a recorded transcript.
//!
//!     cargo run --example gateway

use cipherlang::gateway::{final_input_block, Gateway, MockPolicy, ReplayBackend};

const PROMPT: &str = "Translate the following text from Spanish to English.\n\nInput:\n\nEl perro duerme.\n\nOutput:";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let echo = Gateway::mock(MockPolicy::Echo);
    println!("echo:  {}", echo.complete_prompt(PROMPT)?.response_text);

    let shout = Gateway::mock(MockPolicy::custom(|p| final_input_block(p).to_uppercase()));
    println!("custom: {}", shout.complete_prompt(PROMPT)?.response_text);

    let cache = std::env::temp_dir().join("cipherlang-example-cache.jsonl");
    let _ = std::fs::remove_file(&cache);
    let cached = Gateway::mock(MockPolicy::Fixed("The dog sleeps.".into())).with_cache_file(&cache)?;
    cached.complete_prompt(PROMPT)?;
    cached.complete_prompt(PROMPT)?;
    let s = cached.stats();
    println!("cache: {} requests, {} hits, {} backend calls", s.requests, s.cache_hits, s.backend_calls);

    // Whatever a gateway answered can be replayed byte for byte.
    let replay = Gateway::new(Box::new(ReplayBackend::new(cached.transcript())), cached.model_id());
    println!("replay: {}", replay.complete_prompt(PROMPT)?.response_text);
    match replay.complete_prompt("something never recorded") {
        Ok(_) => println!("unexpected answer"),
        Err(e) => println!("replay miss: {e}"),
    }
    Ok(())
}
