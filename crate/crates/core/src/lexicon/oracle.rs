use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Mutex;

use super::{LexMatch, Lexicon, LexiconError, Provenance};
use crate::cipher::CipherMap;

/// Pre-fetched per-word translations standing in for a full-coverage lexicon.
///
/// The store is a pure cache: nothing here talks to a translation service.
/// Misses are remembered so an offline step can fetch them in batch.
#[derive(Debug)]
pub struct OracleStore {
    lexicon: Lexicon,
    provenance_note: Option<String>,
    misses: Mutex<BTreeSet<String>>,
    // Set when the store has been ciphered; misses are logged in plain form.
    decoder: Option<CipherMap>,
}

impl Clone for OracleStore {
    fn clone(&self) -> Self {
        OracleStore {
            lexicon: self.lexicon.clone(),
            provenance_note: self.provenance_note.clone(),
            misses: Mutex::new(self.misses.lock().expect("miss log poisoned").clone()),
            decoder: self.decoder.clone(),
        }
    }
}

impl OracleStore {
    pub fn new(lexicon: Lexicon) -> Self {
        OracleStore { lexicon, provenance_note: None, misses: Mutex::new(BTreeSet::new()), decoder: None }
    }

    /// Same shape as a lexicon file, with an optional `#provenance<TAB>...`
    /// header line.
    pub fn parse(text: &str, source_lang: &str, target_lang: &str) -> Result<Self, LexiconError> {
        let note = text
            .lines()
            .find_map(|l| l.strip_prefix("#provenance\t").map(|s| s.trim().to_string()));
        let lexicon = Lexicon::parse_tsv(text, source_lang, target_lang, Provenance::Oracle)?;
        Ok(OracleStore { provenance_note: note, ..OracleStore::new(lexicon) })
    }

    pub fn load(path: impl AsRef<Path>, source_lang: &str, target_lang: &str) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?, source_lang, target_lang)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(note) = &self.provenance_note {
            out.push_str("#provenance\t");
            out.push_str(note);
            out.push('\n');
        }
        out.push_str(&self.lexicon.to_tsv());
        out
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn provenance_note(&self) -> Option<&str> {
        self.provenance_note.as_deref()
    }

    pub fn lookup(&self, word: &str) -> Vec<String> {
        match self.lexicon.lookup_exact(word, usize::MAX) {
            Some(m) => m.targets,
            None => {
                let plain = match &self.decoder {
                    Some(map) if map.language() == self.lexicon.source_lang() => map.invert(word),
                    _ => word.to_string(),
                };
                self.misses.lock().expect("miss log poisoned").insert(plain);
                Vec::new()
            }
        }
    }

    /// Oracle entries as lexicon matches (exact only, distance 0).
    pub fn lookup_match(&self, word: &str, cap: usize) -> Option<LexMatch> {
        let mut targets = self.lookup(word);
        if targets.is_empty() {
            return None;
        }
        targets.truncate(cap);
        Some(LexMatch {
            source_query: word.to_string(),
            matched_key: word.to_string(),
            distance: 0.0,
            targets,
            via_lemma: false,
        })
    }

    pub fn misses(&self) -> Vec<String> {
        self.misses.lock().expect("miss log poisoned").iter().cloned().collect()
    }

    pub fn write_misses(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut text = self.misses().join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        std::fs::write(path, text)
    }

    pub fn ciphered(&self, map: &CipherMap) -> OracleStore {
        OracleStore {
            lexicon: self.lexicon.map_language(map.language(), |s| map.apply(s)),
            provenance_note: self.provenance_note.clone(),
            misses: Mutex::new(BTreeSet::new()),
            decoder: Some(map.clone()),
        }
    }
}

pub fn oracle_lookup(store: &OracleStore, word: &str) -> Vec<String> {
    store.lookup(word)
}
