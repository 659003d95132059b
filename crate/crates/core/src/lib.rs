//! Ciphered high-resource languages for testing in-context language learning.
//!
//! A seeded, class-preserving character cipher turns a well-resourced
//! language into a synthetic "new" language while keeping every material
//! (lexicons, annotations, parallel examples) aligned with the original.

pub mod annotations;
pub mod cipher;
pub mod gateway;
pub mod lexicon;
pub mod metrics;
pub mod probe;
pub mod retrieval;
pub mod runner;
pub mod scripts;
pub mod strategies;
pub mod text;
