//! Bilingual word lists with exact, lemma and fuzzy lookup.

mod oracle;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{oracle_lookup, OracleStore};

use crate::text::normalize;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Curated,
    Oracle,
}

/// Tuning for fuzzy lookup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookupParams {
    /// Source matches returned per query word.
    pub k: usize,
    /// Target equivalents listed per match.
    pub per_match_cap: usize,
    /// Matches with normalized distance above this are dropped.
    pub threshold: f64,
}

impl Default for LookupParams {
    fn default() -> Self {
        LookupParams { k: 2, per_match_cap: 2, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexMatch {
    pub source_query: String,
    pub matched_key: String,
    pub distance: f64,
    pub targets: Vec<String>,
    /// Found through the lemma rather than the surface form.
    #[serde(default)]
    pub via_lemma: bool,
}

#[derive(Debug, Clone)]
struct NormKey {
    chars: Vec<char>,
    /// Original-cased keys sharing this lowercase form, in file order.
    entries: Vec<usize>,
}

/// Multi-valued word map `source → [targets]`, in file order.
#[derive(Debug, Clone)]
pub struct Lexicon {
    source_lang: String,
    target_lang: String,
    provenance: Provenance,
    entries: Vec<(String, Vec<String>)>,
    key_pos: HashMap<String, usize>,
    norm: Vec<NormKey>,
    norm_pos: HashMap<String, usize>,
    by_len: BTreeMap<usize, Vec<usize>>,
}

impl Lexicon {
    pub fn new(source_lang: &str, target_lang: &str, provenance: Provenance) -> Self {
        Lexicon {
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            provenance,
            entries: Vec::new(),
            key_pos: HashMap::new(),
            norm: Vec::new(),
            norm_pos: HashMap::new(),
            by_len: BTreeMap::new(),
        }
    }

    pub fn from_pairs<S: AsRef<str>>(
        source_lang: &str,
        target_lang: &str,
        pairs: impl IntoIterator<Item = (S, S)>,
    ) -> Self {
        let mut lex = Lexicon::new(source_lang, target_lang, Provenance::Curated);
        for (s, t) in pairs {
            lex.insert(s.as_ref(), t.as_ref());
        }
        lex
    }

    pub fn source_lang(&self) -> &str {
        &self.source_lang
    }

    pub fn target_lang(&self) -> &str {
        &self.target_lang
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of (source, target) pairs.
    pub fn pair_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn get(&self, source: &str) -> Option<&[String]> {
        self.key_pos.get(source).map(|&i| self.entries[i].1.as_slice())
    }

    /// Adds one pair. Empty sides are ignored; repeated targets are kept once.
    pub fn insert(&mut self, source: &str, target: &str) {
        let (source, target) = (source.trim(), target.trim());
        if source.is_empty() || target.is_empty() {
            return;
        }
        let idx = match self.key_pos.get(source) {
            Some(&i) => i,
            None => {
                let i = self.entries.len();
                self.entries.push((source.to_string(), Vec::new()));
                self.key_pos.insert(source.to_string(), i);
                self.index_key(source, i);
                i
            }
        };
        let targets = &mut self.entries[idx].1;
        if !targets.iter().any(|t| t == target) {
            targets.push(target.to_string());
        }
    }

    fn index_key(&mut self, source: &str, entry: usize) {
        let lower = source.to_lowercase();
        match self.norm_pos.get(&lower) {
            Some(&n) => self.norm[n].entries.push(entry),
            None => {
                let n = self.norm.len();
                let chars: Vec<char> = lower.chars().collect();
                self.by_len.entry(chars.len()).or_default().push(n);
                self.norm_pos.insert(lower, n);
                self.norm.push(NormKey { chars, entries: vec![entry] });
            }
        }
    }

    /// Tab-separated `source<TAB>target`, one pair per line. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse_tsv(
        text: &str,
        source_lang: &str,
        target_lang: &str,
        provenance: Provenance,
    ) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new(source_lang, target_lang, provenance);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(LexiconError::Parse {
                    line: i + 1,
                    message: format!("expected 2 tab-separated columns, found {}", cols.len()),
                });
            }
            lex.insert(&normalize(cols[0]), &normalize(cols[1]));
        }
        Ok(lex)
    }

    pub fn load_tsv(
        path: impl AsRef<Path>,
        source_lang: &str,
        target_lang: &str,
        provenance: Provenance,
    ) -> Result<Self, LexiconError> {
        Self::parse_tsv(&std::fs::read_to_string(path)?, source_lang, target_lang, provenance)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, targets) in &self.entries {
            for t in targets {
                let _ = writeln!(out, "{k}\t{t}");
            }
        }
        out
    }

    /// Swaps direction: every `s → t` becomes `t → s`.
    pub fn reversed(&self) -> Lexicon {
        let mut lex = Lexicon::new(&self.target_lang, &self.source_lang, self.provenance);
        for (k, targets) in &self.entries {
            for t in targets {
                lex.insert(t, k);
            }
        }
        lex
    }

    /// Rewrites the side(s) written in `language` with `f`.
    pub fn map_language(&self, language: &str, f: impl Fn(&str) -> String) -> Lexicon {
        let src = self.source_lang == language;
        let tgt = self.target_lang == language;
        let mut lex = Lexicon::new(&self.source_lang, &self.target_lang, self.provenance);
        for (k, targets) in &self.entries {
            let key = if src { f(k) } else { k.clone() };
            for t in targets {
                let t = if tgt { f(t) } else { t.clone() };
                lex.insert(&key, &t);
            }
        }
        lex
    }

    /// Up to `k` source entries within the fuzzy threshold, nearest first.
    /// Ties break on the matched key. Matching is case-insensitive; results
    /// keep the lexicon's casing.
    pub fn lookup(&self, word: &str, params: &LookupParams) -> Vec<LexMatch> {
        let query: Vec<char> = normalize(word).to_lowercase().chars().collect();
        if query.is_empty() || params.k == 0 {
            return Vec::new();
        }
        let qlen = query.len();
        let mut found: Vec<(f64, &NormKey)> = Vec::new();
        for (&len, keys) in &self.by_len {
            let longest = len.max(qlen);
            // The length gap alone is a lower bound on the edit distance.
            if (len.abs_diff(qlen) as f64) / (longest as f64) > params.threshold {
                continue;
            }
            for &n in keys {
                let key = &self.norm[n];
                let d = levenshtein_chars(&query, &key.chars) as f64 / longest as f64;
                if d <= params.threshold {
                    found.push((d, key));
                }
            }
        }
        let mut matches: Vec<LexMatch> = found
            .into_iter()
            .map(|(distance, key)| self.make_match(word, distance, key, params.per_match_cap))
            .collect();
        sort_matches(&mut matches);
        matches.truncate(params.k);
        matches
    }

    fn make_match(&self, query: &str, distance: f64, key: &NormKey, cap: usize) -> LexMatch {
        let mut targets: Vec<String> = Vec::new();
        for &e in &key.entries {
            for t in &self.entries[e].1 {
                if !targets.contains(t) {
                    targets.push(t.clone());
                }
            }
        }
        targets.truncate(cap);
        LexMatch {
            source_query: query.to_string(),
            matched_key: self.entries[key.entries[0]].0.clone(),
            distance,
            targets,
            via_lemma: false,
        }
    }

    /// Exact (case-insensitive) hit only.
    pub fn lookup_exact(&self, word: &str, cap: usize) -> Option<LexMatch> {
        let lower = normalize(word).to_lowercase();
        let n = *self.norm_pos.get(&lower)?;
        Some(self.make_match(word, 0.0, &self.norm[n], cap))
    }

    /// Union of the surface and lemma lookups, deduplicated by matched key.
    /// A key reached both ways keeps the surface-derived match.
    pub fn lookup_with_lemma(&self, word: &str, lemma: &str, params: &LookupParams) -> Vec<LexMatch> {
        let mut out = self.lookup(word, params);
        if normalize(lemma).to_lowercase() == normalize(word).to_lowercase() {
            return out;
        }
        for mut m in self.lookup(lemma, params) {
            if out.iter().any(|o| o.matched_key == m.matched_key) {
                continue;
            }
            m.via_lemma = true;
            out.push(m);
        }
        sort_matches(&mut out);
        out
    }
}

fn sort_matches(matches: &mut [LexMatch]) {
    matches.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.matched_key.cmp(&b.matched_key))
            .then_with(|| a.via_lemma.cmp(&b.via_lemma))
    });
}

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

/// `levenshtein(a, b) / max(|a|, |b|)`, and 0 for two empty strings.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la == 0 && lb == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / la.max(lb) as f64
}
