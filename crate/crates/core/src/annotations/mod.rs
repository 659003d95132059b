//! Per-sentence morphology and named entities, read from CoNLL-U and small
//! tab-separated sidecars.

mod conllu;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conllu::{dump_conllu, parse_conllu, parse_conllu_str};

use crate::cipher::CipherMap;
use crate::scripts::Registry;
use crate::text::normalize;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: Option<String>,
    pub feats: Vec<(String, String)>,
    pub head: Option<String>,
    pub deprel: Option<String>,
    pub deps: Option<String>,
    pub misc: Vec<String>,
    /// Raw tag from MISC, e.g. `B-PER`.
    pub ne_tag: Option<String>,
    /// Entity type without the position prefix, e.g. `PER`.
    pub ne_label: Option<String>,
}

impl AnnotatedToken {
    pub fn space_after(&self) -> bool {
        !self.misc.iter().any(|m| m == "SpaceAfter=No")
    }

    /// `a=b|c=d`, or `-` when there are no features.
    pub fn feats_string(&self) -> String {
        if self.feats.is_empty() {
            return "-".to_string();
        }
        self.feats.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("|")
    }
}

/// A multiword surface (`del`) covering tokens `first..=last` (`de`, `el`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiwordToken {
    pub first: usize,
    pub last: usize,
    pub surface: String,
    pub misc: Vec<String>,
}

/// Entity over tokens `start..end` (end exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub entity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence_id: String,
    pub text: String,
    pub tokens: Vec<AnnotatedToken>,
    pub multiword: Vec<MultiwordToken>,
    pub ne_spans: Vec<NeSpan>,
    /// Comment lines other than `sent_id` and `text`, without the `#`.
    pub comments: Vec<String>,
}

impl AnnotatedSentence {
    /// Joins surfaces using the recorded spacing; multiword ranges contribute
    /// their own surface once.
    pub fn reconstruct_text(&self) -> String {
        self.span_text(0, self.tokens.len()).trim_end().to_string()
    }

    fn span_text(&self, start: usize, end: usize) -> String {
        let mut out = String::new();
        let mut i = start;
        while i < end {
            match self.multiword.iter().find(|m| m.first == i) {
                Some(mw) => {
                    out.push_str(&mw.surface);
                    if !mw.misc.iter().any(|m| m == "SpaceAfter=No") {
                        out.push(' ');
                    }
                    i = mw.last + 1;
                }
                None => {
                    let t = &self.tokens[i];
                    out.push_str(&t.surface);
                    if t.space_after() {
                        out.push(' ');
                    }
                    i += 1;
                }
            }
        }
        out.trim_end().to_string()
    }

    /// Applies `f` to every language-text field: text, surfaces, lemmas,
    /// multiword surfaces and entity strings. Tags and features are untouched.
    pub fn map_text(&self, f: impl Fn(&str) -> String) -> AnnotatedSentence {
        let mut s = self.clone();
        s.text = f(&s.text);
        for t in &mut s.tokens {
            t.surface = f(&t.surface);
            t.lemma = f(&t.lemma);
        }
        for m in &mut s.multiword {
            m.surface = f(&m.surface);
        }
        for span in &mut s.ne_spans {
            span.entity = f(&span.entity);
        }
        s
    }
}

/// Sentences annotated in one language, addressable by sentence id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub language: String,
    pub sentences: Vec<AnnotatedSentence>,
}

impl AnnotationSet {
    pub fn new(language: &str, sentences: Vec<AnnotatedSentence>) -> Self {
        AnnotationSet { language: language.to_string(), sentences }
    }

    pub fn load(path: impl AsRef<Path>, language: &str) -> Result<Self, AnnotationError> {
        let file = std::fs::File::open(path)?;
        Ok(AnnotationSet::new(language, parse_conllu(std::io::BufReader::new(file))?))
    }

    pub fn get(&self, sentence_id: &str) -> Option<&AnnotatedSentence> {
        self.sentences.iter().find(|s| s.sentence_id == sentence_id)
    }

    pub fn ciphered(&self, map: &CipherMap) -> AnnotationSet {
        if self.language != map.language() {
            return self.clone();
        }
        AnnotationSet {
            language: self.language.clone(),
            sentences: self.sentences.iter().map(|s| s.map_text(|t| map.apply(t))).collect(),
        }
    }
}

/// Reads the entity sidecar: `sentence_id<TAB>start<TAB>end<TAB>label<TAB>entity`
/// with zero-based, end-exclusive token offsets. Spans replace any derived
/// from MISC tags for the sentences they mention. Returns ids that matched
/// no sentence.
pub fn attach_ne_spans(sentences: &mut [AnnotatedSentence], tsv: &str) -> Result<Vec<String>, AnnotationError> {
    let mut by_id: HashMap<String, Vec<NeSpan>> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for (i, line) in tsv.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| AnnotationError::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(bad(format!("expected 5 columns, found {}", cols.len())));
        }
        let start: usize = cols[1].parse().map_err(|_| bad("start is not an integer".into()))?;
        let end: usize = cols[2].parse().map_err(|_| bad("end is not an integer".into()))?;
        if end <= start {
            return Err(bad("empty span".into()));
        }
        if !by_id.contains_key(cols[0]) {
            order.push(cols[0].to_string());
        }
        by_id.entry(cols[0].to_string()).or_default().push(NeSpan {
            start,
            end,
            label: cols[3].to_string(),
            entity: normalize(cols[4]),
        });
    }
    let mut unmatched = Vec::new();
    for id in order {
        let spans = by_id.remove(&id).unwrap_or_default();
        match sentences.iter_mut().find(|s| s.sentence_id == id) {
            Some(s) if spans.iter().all(|sp| sp.end <= s.tokens.len()) => s.ne_spans = spans,
            Some(s) => {
                return Err(AnnotationError::Parse {
                    line: 0,
                    message: format!("span beyond the {} tokens of sentence {}", s.tokens.len(), s.sentence_id),
                })
            }
            None => unmatched.push(id),
        }
    }
    Ok(unmatched)
}

pub fn dump_ne_spans(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for sp in &s.ne_spans {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", s.sentence_id, sp.start, sp.end, sp.label, sp.entity);
        }
    }
    out
}

/// Two-column `entity<TAB>transliteration` table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transliterations {
    table: HashMap<String, String>,
}

impl Transliterations {
    pub fn parse(text: &str) -> Result<Self, AnnotationError> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line.split_once('\t').ok_or_else(|| AnnotationError::Parse {
                line: i + 1,
                message: "expected 2 tab-separated columns".into(),
            })?;
            table.insert(normalize(a.trim()), normalize(b.trim()));
        }
        Ok(Transliterations { table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Whole-entity entry first, then word by word. `None` if any word is missing.
    pub fn transliterate(&self, entity: &str) -> Option<String> {
        if let Some(t) = self.table.get(entity) {
            return Some(t.clone());
        }
        let words: Option<Vec<&str>> =
            entity.split_whitespace().map(|w| self.table.get(w).map(String::as_str)).collect();
        words.filter(|w| !w.is_empty()).map(|w| w.join(" "))
    }
}

/// Named entities as they should appear on each side of the translation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeGlossary {
    pub source_lang: String,
    pub target_lang: String,
    pub entries: Vec<(String, String)>,
}

impl NeGlossary {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, source: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == source).map(|(_, v)| v.as_str())
    }

    /// Ciphers whichever side is written in the map's language.
    pub fn ciphered(&self, map: &CipherMap) -> NeGlossary {
        let src = self.source_lang == map.language();
        let tgt = self.target_lang == map.language();
        NeGlossary {
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
            entries: self
                .entries
                .iter()
                .map(|(k, v)| {
                    (if src { map.apply(k) } else { k.clone() }, if tgt { map.apply(v) } else { v.clone() })
                })
                .collect(),
        }
    }

    /// Entries whose source side occurs among `words`.
    pub fn restricted_to<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Vec<(String, String)> {
        let words: Vec<&str> = words.into_iter().collect();
        self.entries
            .iter()
            .filter(|(k, _)| k.split_whitespace().all(|part| words.contains(&part)))
            .cloned()
            .collect()
    }
}

fn scripts_differ(a: &str, b: &str) -> bool {
    let reg = Registry::builtin();
    match (reg.language(a), reg.language(b)) {
        (Ok(x), Ok(y)) => x.script != y.script,
        _ => false,
    }
}

/// Plain-state glossary over the entities in `sentences` (written in
/// `source_lang`). When the two languages use different scripts and a table
/// is given, the output side is transliterated; otherwise it is the entity
/// itself. First occurrence wins; order follows the sentences.
pub fn build_ne_glossary(
    sentences: &[AnnotatedSentence],
    source_lang: &str,
    target_lang: &str,
    transliterations: Option<&Transliterations>,
) -> NeGlossary {
    let translit = transliterations.filter(|_| scripts_differ(source_lang, target_lang));
    let mut entries: Vec<(String, String)> = Vec::new();
    for s in sentences {
        for span in &s.ne_spans {
            if entries.iter().any(|(k, _)| *k == span.entity) {
                continue;
            }
            let out = match translit.map(|t| t.transliterate(&span.entity)) {
                Some(Some(t)) => t,
                Some(None) => {
                    log::warn!("no transliteration for entity `{}`", span.entity);
                    span.entity.clone()
                }
                None => span.entity.clone(),
            };
            entries.push((span.entity.clone(), out));
        }
    }
    NeGlossary { source_lang: source_lang.to_string(), target_lang: target_lang.to_string(), entries }
}

/// Glossary as the model sees it: built in plain state, then ciphered with `map`.
pub fn ne_glossary(
    sentences: &[AnnotatedSentence],
    map: &CipherMap,
    source_lang: &str,
    target_lang: &str,
    transliterations: Option<&Transliterations>,
) -> NeGlossary {
    build_ne_glossary(sentences, source_lang, target_lang, transliterations).ciphered(map)
}
