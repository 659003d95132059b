//! Seeded substitution ciphers and consistent ciphering of whole material sets.

mod map;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use map::{build_map, build_map_in, pseudo_name, CipherMap};

use crate::annotations::{AnnotationSet, NeGlossary};
use crate::lexicon::{Lexicon, OracleStore};
use crate::retrieval::ExemplarPool;
use crate::scripts::InventoryError;
use crate::strategies::SyntaxProfile;

#[derive(Debug, Error)]
pub enum CipherError {
    #[error("cipher map line {line}: {message}")]
    MapFormat { line: usize, message: String },
    #[error("materials are already ciphered")]
    AlreadyCiphered,
    #[error("map is for `{map}` but the materials are `{materials}`")]
    LanguageMismatch { map: String, materials: String },
    #[error(transparent)]
    Inventory(#[from] InventoryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum LanguageState {
    Plain,
    Ciphered { seed: u64, cl_name: String },
}

/// Everything the prompts draw on for one language. Fields hold text in
/// several languages; only text in `language` is touched by ciphering.
#[derive(Debug, Clone)]
pub struct MaterialBundle {
    pub language: String,
    pub lexicon: Option<Lexicon>,
    pub oracle: Option<OracleStore>,
    /// Word translations between a related language and `language`.
    pub pivot_oracle: Option<OracleStore>,
    pub exemplars: Option<ExemplarPool>,
    pub pivot_exemplars: Option<ExemplarPool>,
    pub annotations: Vec<AnnotationSet>,
    pub ne_glossaries: Vec<NeGlossary>,
    pub syntax_profile: Option<SyntaxProfile>,
    /// Free text; spans inside `<...>` are in `language`.
    pub paradigms: Option<String>,
    state: LanguageState,
}

impl MaterialBundle {
    pub fn new(language: &str) -> Self {
        MaterialBundle {
            language: language.to_string(),
            lexicon: None,
            oracle: None,
            pivot_oracle: None,
            exemplars: None,
            pivot_exemplars: None,
            annotations: Vec::new(),
            ne_glossaries: Vec::new(),
            syntax_profile: None,
            paradigms: None,
            state: LanguageState::Plain,
        }
    }

    pub fn state(&self) -> &LanguageState {
        &self.state
    }

    pub fn is_ciphered(&self) -> bool {
        matches!(self.state, LanguageState::Ciphered { .. })
    }

    pub fn annotations_for(&self, language: &str) -> Option<&AnnotationSet> {
        self.annotations.iter().find(|a| a.language == language)
    }

    pub fn glossary_for(&self, source_lang: &str, target_lang: &str) -> Option<&NeGlossary> {
        self.ne_glossaries.iter().find(|g| g.source_lang == source_lang && g.target_lang == target_lang)
    }
}

/// Applies one map to every field, so lexicon entries, exemplars, lemmas and
/// paradigm snippets all agree with the ciphered input.
pub fn cipher_bundle(map: &CipherMap, bundle: &MaterialBundle) -> Result<MaterialBundle, CipherError> {
    if bundle.is_ciphered() {
        return Err(CipherError::AlreadyCiphered);
    }
    if map.language() != bundle.language {
        return Err(CipherError::LanguageMismatch {
            map: map.language().to_string(),
            materials: bundle.language.clone(),
        });
    }
    let apply = |s: &str| map.apply(s);
    Ok(MaterialBundle {
        language: bundle.language.clone(),
        lexicon: bundle.lexicon.as_ref().map(|l| l.map_language(map.language(), apply)),
        oracle: bundle.oracle.as_ref().map(|o| o.ciphered(map)),
        pivot_oracle: bundle.pivot_oracle.as_ref().map(|o| o.ciphered(map)),
        exemplars: bundle.exemplars.as_ref().map(|p| p.ciphered(map)),
        pivot_exemplars: bundle.pivot_exemplars.as_ref().map(|p| p.ciphered(map)),
        annotations: bundle.annotations.iter().map(|a| a.ciphered(map)).collect(),
        ne_glossaries: bundle.ne_glossaries.iter().map(|g| g.ciphered(map)).collect(),
        syntax_profile: bundle.syntax_profile.clone(),
        paradigms: bundle.paradigms.as_deref().map(|p| cipher_marked(map, p)),
        state: LanguageState::Ciphered { seed: map.seed(), cl_name: map.cl_name().to_string() },
    })
}

/// Ciphers the text inside each `<...>` pair and leaves everything else,
/// brackets included, as is. An unclosed `<` is copied verbatim.
pub fn cipher_marked(map: &CipherMap, text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('<') {
        let Some(close) = rest[open..].find('>') else { break };
        out.push_str(&rest[..=open]);
        out.push_str(&map.apply(&rest[open + 1..open + close]));
        out.push('>');
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    out
}
