//! Exemplar pool and BM25 selection of the most similar pairs.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cipher::CipherMap;
use crate::text::{lowercase_words, normalize};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("exemplar pool is empty")]
    EmptyPool,
    #[error("exemplar ids also present in the test set: {0:?}")]
    Overlap(Vec<String>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarPool {
    pub source_lang: String,
    pub target_lang: String,
    pub exemplars: Vec<Exemplar>,
}

impl ExemplarPool {
    /// One JSON object per line: `{"id", "source", "target", "domain"?}`.
    pub fn parse_jsonl(text: &str, source_lang: &str, target_lang: &str) -> Result<Self, RetrievalError> {
        let mut exemplars: Vec<Exemplar> = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| RetrievalError::Parse { line: i + 1, message };
            let mut ex: Exemplar = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            ex.source = normalize(ex.source.trim());
            ex.target = normalize(ex.target.trim());
            if ex.source.is_empty() || ex.target.is_empty() {
                return Err(bad(format!("exemplar {} has an empty side", ex.id)));
            }
            if !seen.insert(ex.id.clone()) {
                return Err(bad(format!("duplicate exemplar id {}", ex.id)));
            }
            exemplars.push(ex);
        }
        Ok(ExemplarPool { source_lang: source_lang.to_string(), target_lang: target_lang.to_string(), exemplars })
    }

    pub fn load(path: impl AsRef<Path>, source_lang: &str, target_lang: &str) -> Result<Self, RetrievalError> {
        Self::parse_jsonl(&std::fs::read_to_string(path)?, source_lang, target_lang)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ex in &self.exemplars {
            out.push_str(&serde_json::to_string(ex).expect("exemplar serializes"));
            out.push('\n');
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<&Exemplar> {
        self.exemplars.iter().find(|e| e.id == id)
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    /// The same pool read in the other direction.
    pub fn reversed(&self) -> ExemplarPool {
        ExemplarPool {
            source_lang: self.target_lang.clone(),
            target_lang: self.source_lang.clone(),
            exemplars: self
                .exemplars
                .iter()
                .map(|e| Exemplar { source: e.target.clone(), target: e.source.clone(), ..e.clone() })
                .collect(),
        }
    }

    pub fn ciphered(&self, map: &CipherMap) -> ExemplarPool {
        let src = self.source_lang == map.language();
        let tgt = self.target_lang == map.language();
        ExemplarPool {
            source_lang: self.source_lang.clone(),
            target_lang: self.target_lang.clone(),
            exemplars: self
                .exemplars
                .iter()
                .map(|e| Exemplar {
                    source: if src { map.apply(&e.source) } else { e.source.clone() },
                    target: if tgt { map.apply(&e.target) } else { e.target.clone() },
                    ..e.clone()
                })
                .collect(),
        }
    }

    /// Fails when any exemplar id is also a test id.
    pub fn check_disjoint<'a>(&self, test_ids: impl IntoIterator<Item = &'a str>) -> Result<(), RetrievalError> {
        let ids: HashSet<&str> = self.exemplars.iter().map(|e| e.id.as_str()).collect();
        let mut overlap: Vec<String> = test_ids.into_iter().filter(|t| ids.contains(t)).map(str::to_string).collect();
        if overlap.is_empty() {
            return Ok(());
        }
        overlap.sort();
        Err(RetrievalError::Overlap(overlap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.5, b: 0.75 }
    }
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    ids: Vec<String>,
    term_freqs: Vec<HashMap<String, u32>>,
    doc_lens: Vec<usize>,
    avgdl: f64,
    df: HashMap<String, usize>,
    params: Bm25Params,
}

pub fn build_index(pool: &ExemplarPool, side: Side) -> Result<Bm25Index, RetrievalError> {
    Bm25Index::build(
        pool.exemplars.iter().map(|e| {
            (e.id.as_str(), match side {
                Side::Source => e.source.as_str(),
                Side::Target => e.target.as_str(),
            })
        }),
        Bm25Params::default(),
    )
}

impl Bm25Index {
    pub fn build<'a>(
        docs: impl IntoIterator<Item = (&'a str, &'a str)>,
        params: Bm25Params,
    ) -> Result<Self, RetrievalError> {
        let mut index = Bm25Index {
            ids: Vec::new(),
            term_freqs: Vec::new(),
            doc_lens: Vec::new(),
            avgdl: 0.0,
            df: HashMap::new(),
            params,
        };
        for (id, text) in docs {
            let tokens = lowercase_words(text);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *index.df.entry(t.clone()).or_default() += 1;
            }
            index.ids.push(id.to_string());
            index.doc_lens.push(tokens.len());
            index.term_freqs.push(tf);
        }
        if index.ids.is_empty() {
            return Err(RetrievalError::EmptyPool);
        }
        index.avgdl = index.doc_lens.iter().sum::<usize>() as f64 / index.ids.len() as f64;
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.df(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// BM25 score of document `doc` (by position) for `query`, summed over
    /// distinct query terms.
    pub fn score(&self, query: &str, doc: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let mut terms = lowercase_words(query);
        terms.sort();
        terms.dedup();
        let dl = self.doc_lens[doc] as f64;
        let norm = if self.avgdl > 0.0 { 1.0 - b + b * dl / self.avgdl } else { 1.0 };
        terms
            .iter()
            .filter_map(|t| self.term_freqs[doc].get(t).map(|&tf| (t, tf as f64)))
            .map(|(t, tf)| self.idf(t) * tf * (k1 + 1.0) / (tf + k1 * norm))
            .fold(0.0, |a, b| a + b)
    }

    /// Every document with its score, best first; ties by ascending id.
    pub fn ranked(&self, query: &str) -> Vec<(&str, f64)> {
        let mut all: Vec<(&str, f64)> =
            (0..self.ids.len()).map(|i| (self.ids[i].as_str(), self.score(query, i))).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        all
    }

    pub fn top_e(&self, query: &str, e: usize) -> Vec<String> {
        self.ranked(query).into_iter().take(e).map(|(id, _)| id.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn index(docs: &[(&str, &str)]) -> Bm25Index {
        Bm25Index::build(docs.iter().copied(), Bm25Params::default()).unwrap()
    }

    #[test]
    fn definitional_counts() {
        let idx = index(&[("a", "the cat sat"), ("b", "the dog"), ("c", "the cat and the hat")]);
        assert_eq!(idx.len(), 3);
        assert!((idx.avgdl() - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(idx.df("the"), 3);
        assert_eq!(idx.df("cat"), 2);
        assert_eq!(idx.df("zebra"), 0);
    }

    #[test]
    fn identical_document_ranks_first() {
        let idx = index(&[("a", "red fox"), ("b", "blue whale"), ("c", "green frog")]);
        assert_eq!(idx.top_e("blue whale", 1), vec!["b"]);
    }

    #[test]
    fn disjoint_query_falls_back_to_id_order() {
        let idx = index(&[("c", "x"), ("a", "y"), ("b", "z")]);
        assert_eq!(idx.top_e("nothing here", 2), vec!["a", "b"]);
        assert_eq!(idx.top_e("nothing", 10).len(), 3);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let pool = ExemplarPool::parse_jsonl("", "spa", "eng").unwrap();
        assert!(matches!(build_index(&pool, Side::Source), Err(RetrievalError::EmptyPool)));
    }

    #[test]
    fn pool_checks() {
        let text = "{\"id\":\"p1\",\"source\":\"hola\",\"target\":\"hello\"}\n";
        let pool = ExemplarPool::parse_jsonl(text, "spa", "eng").unwrap();
        assert!(pool.check_disjoint(["t1"]).is_ok());
        assert!(matches!(pool.check_disjoint(["p1"]), Err(RetrievalError::Overlap(_))));
        assert!(ExemplarPool::parse_jsonl(&format!("{text}{text}"), "spa", "eng").is_err());
        assert!(ExemplarPool::parse_jsonl("{\"id\":\"x\",\"source\":\"\",\"target\":\"a\"}", "spa", "eng").is_err());
        assert_eq!(pool.to_jsonl(), text);
    }

    #[test]
    fn only_the_ciphered_side_changes() {
        let map = crate::cipher::build_map("spa", 2, None).unwrap();
        let text = "{\"id\":\"p1\",\"source\":\"hola amigo\",\"target\":\"hello friend\"}\n";
        let pool = ExemplarPool::parse_jsonl(text, "spa", "eng").unwrap().ciphered(&map);
        assert_eq!(pool.exemplars[0].target, "hello friend");
        assert_eq!(map.invert(&pool.exemplars[0].source), "hola amigo");
    }

    proptest! {
        // A disjoint document raises every idf by the same additive amount,
        // so multi-term orders can flip. What survives: for a single-term
        // query, when the new document leaves avgdl unchanged, idf is a
        // common factor and the order is stable.
        #[test]
        fn scores_non_negative_and_stable_under_disjoint_addition(
            docs in proptest::collection::vec(proptest::collection::vec("[a-d]", 1..7), 1..8),
            q in "[a-d]",
        ) {
            let total: usize = docs.iter().map(Vec::len).sum();
            prop_assume!(total.is_multiple_of(docs.len()));
            let texts: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
            let ids: Vec<String> = (0..texts.len()).map(|i| format!("d{i:02}")).collect();
            let mut pairs: Vec<(&str, &str)> =
                ids.iter().map(String::as_str).zip(texts.iter().map(String::as_str)).collect();
            let before = index(&pairs);
            let filler = vec!["x"; total / docs.len()].join(" ");
            pairs.push(("zz", &filler));
            let after = index(&pairs);
            let scores_before: std::collections::HashMap<&str, f64> = before.ranked(&q).into_iter().collect();
            prop_assert!(scores_before.values().all(|s| *s >= 0.0));
            // Orders agree up to ties that are exact in real arithmetic.
            let order_after: Vec<&str> = after.ranked(&q).into_iter().map(|(id, _)| id).filter(|id| *id != "zz").collect();
            prop_assert_eq!(order_after.len(), scores_before.len());
            for w in order_after.windows(2) {
                prop_assert!(scores_before[w[0]] >= scores_before[w[1]] - 1e-9);
            }
        }
    }
}
