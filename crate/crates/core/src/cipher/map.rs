use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unicode_normalization::char::is_combining_mark;

use super::CipherError;
use crate::scripts::{CipherClass, Registry, ScriptId, ScriptInventory};

const MAGIC: &str = "#cipher-map v1";

/// Codepoint pairs sorted by source; binary search beats hashing for maps
/// of a few hundred letters.
#[derive(Debug, Clone, PartialEq, Eq)]
struct CharTable(Vec<(char, char)>);

impl CharTable {
    fn new(pairs: &HashMap<char, char>) -> Self {
        let mut v: Vec<(char, char)> = pairs.iter().map(|(k, v)| (*k, *v)).collect();
        v.sort_unstable();
        CharTable(v)
    }

    fn get(&self, c: char) -> Option<char> {
        self.0.binary_search_by_key(&c, |p| p.0).ok().map(|i| self.0[i].1)
    }
}

/// A seeded, class-preserving character permutation for one language.
///
/// `forward` covers every inventory letter in both cases; anything else is
/// mapped to itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherMap {
    language: String,
    cl_name: String,
    seed: u64,
    script: ScriptId,
    forward: CharTable,
    inverse: CharTable,
}

impl CipherMap {
    /// Shuffles each class independently with a ChaCha stream seeded from
    /// `seed`. Within a class, letters with an uppercase partner and caseless
    /// letters are shuffled separately so case can be carried across.
    pub fn build(inventory: &ScriptInventory, seed: u64, cl_name: Option<&str>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut forward = HashMap::new();
        for class in CipherClass::PERMUTED {
            let (cased, caseless) = inventory.case_partition(class);
            for group in [cased, caseless] {
                let mut image = group.clone();
                image.shuffle(&mut rng);
                for (src, dst) in group.iter().zip(&image) {
                    forward.insert(*src, *dst);
                    if let (Some(su), Some(du)) =
                        (inventory.uppercase_of(*src), inventory.uppercase_of(*dst))
                    {
                        forward.insert(su, du);
                    }
                }
            }
        }
        let inverse = forward.iter().map(|(k, v)| (*v, *k)).collect();
        CipherMap {
            language: inventory.language.code.clone(),
            cl_name: cl_name.map(str::to_string).unwrap_or_else(|| pseudo_name(seed)),
            seed,
            script: inventory.script(),
            forward: CharTable::new(&forward),
            inverse: CharTable::new(&inverse),
        }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn cl_name(&self) -> &str {
        &self.cl_name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn script(&self) -> ScriptId {
        self.script
    }

    pub fn forward(&self, c: char) -> char {
        self.forward.get(c).unwrap_or(c)
    }

    pub fn backward(&self, c: char) -> char {
        self.inverse.get(c).unwrap_or(c)
    }

    /// Mapped codepoints (both cases), sorted.
    pub fn domain(&self) -> Vec<char> {
        self.forward.0.iter().map(|p| p.0).collect()
    }

    pub fn len(&self) -> usize {
        self.forward.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.0.is_empty()
    }

    /// Character-wise substitution. Codepoint count is preserved.
    pub fn apply(&self, text: &str) -> String {
        let mut unknown = 0usize;
        let out: String = text
            .chars()
            .map(|c| match self.forward.get(c) {
                Some(m) => m,
                None => {
                    if c.is_alphabetic() && !is_combining_mark(c) {
                        unknown += 1;
                    }
                    c
                }
            })
            .collect();
        if unknown > 0 {
            log::warn!(
                "{unknown} letter(s) outside the {} inventory passed through unchanged",
                self.language
            );
        }
        out
    }

    pub fn invert(&self, text: &str) -> String {
        text.chars().map(|c| self.backward(c)).collect()
    }

    /// `<lang>-<seed>.cmap`: maps are content-addressed by language and seed.
    pub fn file_name(language: &str, seed: u64) -> String {
        format!("{language}-{seed}.cmap")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "language\t{}", self.language);
        let _ = writeln!(out, "cl_name\t{}", self.cl_name);
        let _ = writeln!(out, "seed\t{}", self.seed);
        let _ = writeln!(out, "script\t{}", self.script);
        for (src, dst) in &self.forward.0 {
            let _ = writeln!(out, "U+{:04X}\tU+{:04X}", *src as u32, *dst as u32);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CipherError> {
        let bad = |line: usize, msg: &str| CipherError::MapFormat { line, message: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, MAGIC)) => {}
            _ => return Err(bad(1, "missing cipher-map header")),
        }
        let mut header = HashMap::new();
        let mut forward = HashMap::new();
        let mut inverse = HashMap::new();
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('\t').ok_or_else(|| bad(no, "expected two tab-separated fields"))?;
            if key.starts_with("U+") {
                let src = parse_cp(key).ok_or_else(|| bad(no, "bad source codepoint"))?;
                let dst = parse_cp(value).ok_or_else(|| bad(no, "bad target codepoint"))?;
                if forward.insert(src, dst).is_some() {
                    return Err(bad(no, "duplicate source codepoint"));
                }
                if inverse.insert(dst, src).is_some() {
                    return Err(bad(no, "target codepoint used twice; map is not a bijection"));
                }
            } else {
                header.insert(key.to_string(), value.to_string());
            }
        }
        let field = |k: &str| header.get(k).cloned().ok_or_else(|| bad(0, &format!("missing `{k}` header")));
        let seed = field("seed")?.parse().map_err(|_| bad(0, "seed is not an integer"))?;
        let script = ScriptId::parse(&field("script")?).ok_or_else(|| bad(0, "unknown script"))?;
        // A bijection of a finite set onto itself: the image must equal the domain.
        if forward.keys().any(|k| !inverse.contains_key(k)) {
            return Err(bad(0, "image and domain differ; map is not a permutation"));
        }
        Ok(CipherMap {
            language: field("language")?,
            cl_name: field("cl_name")?,
            seed,
            script,
            forward: CharTable::new(&forward),
            inverse: CharTable::new(&inverse),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CipherError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CipherError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// A map with explicit pairs, mostly for tests and toy examples.
    pub fn from_pairs(language: &str, script: ScriptId, pairs: &[(char, char)]) -> Result<Self, CipherError> {
        let mut text = format!("{MAGIC}\nlanguage\t{language}\ncl_name\tToy\nseed\t0\nscript\t{script}\n");
        for (a, b) in pairs {
            let _ = writeln!(text, "U+{:04X}\tU+{:04X}", *a as u32, *b as u32);
        }
        Self::from_text(&text)
    }
}

/// Build the map for a registered language from the shipped inventories.
pub fn build_map(language: &str, seed: u64, cl_name: Option<&str>) -> Result<CipherMap, CipherError> {
    build_map_in(Registry::builtin(), language, seed, cl_name)
}

pub fn build_map_in(
    registry: &Registry,
    language: &str,
    seed: u64,
    cl_name: Option<&str>,
) -> Result<CipherMap, CipherError> {
    Ok(CipherMap::build(registry.inventory_for(language)?, seed, cl_name))
}

fn parse_cp(s: &str) -> Option<char> {
    u32::from_str_radix(s.strip_prefix("U+")?, 16).ok().and_then(char::from_u32)
}

/// Deterministic invented language name, e.g. "Tavoreni".
pub fn pseudo_name(seed: u64) -> String {
    const ONSETS: [&str; 14] = ["b", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh"];
    const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e61_6d65);
    let syllables = rng.gen_range(2..=3);
    let mut name = String::new();
    for _ in 0..syllables {
        name.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
        name.push_str(NUCLEI[rng.gen_range(0..NUCLEI.len())]);
    }
    if rng.gen_bool(0.5) {
        name.push_str(["n", "l", "r", "k"][rng.gen_range(0..4)]);
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(f) => f.to_uppercase().chain(chars).collect(),
        None => name,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scripts::inventory_for;

    #[test]
    fn toy_map_applies_characterwise() {
        let map = CipherMap::from_pairs("spa", ScriptId::LatinExt, &[('b', 'c'), ('c', 'b'), ('a', 'a')]).unwrap();
        assert_eq!(map.apply("abc"), "acb");
        assert_eq!(map.invert("acb"), "abc");
    }

    #[test]
    fn neutral_characters_pass_through() {
        let map = build_map("spa", 3, None).unwrap();
        let out = map.apply("12:30, OK?");
        for (a, b) in "12:30, OK?".chars().zip(out.chars()) {
            if !a.is_alphabetic() {
                assert_eq!(a, b);
            }
        }
        assert_eq!(map.invert("…!!"), "…!!");
    }

    #[test]
    fn same_seed_same_map() {
        let a = build_map("spa", 11, Some("Serra")).unwrap();
        let b = build_map("spa", 11, Some("Serra")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a.to_text(), build_map("spa", 12, Some("Serra")).unwrap().to_text());
    }

    #[test]
    fn classes_and_case_preserved() {
        for lang in ["spa", "tur", "deu", "vie", "hin", "tel"] {
            let inv = inventory_for(lang).unwrap();
            let map = build_map(lang, 99, None).unwrap();
            for c in map.domain() {
                let m = map.forward(c);
                assert_eq!(inv.classify(c), inv.classify(m), "{lang} {c}->{m}");
                assert_eq!(c.is_uppercase(), m.is_uppercase(), "{lang} {c}->{m}");
                assert_eq!(map.backward(m), c);
            }
        }
    }

    #[test]
    fn round_trip_sentence() {
        let map = build_map("deu", 5, None).unwrap();
        let s = "Dies ist ein Beispielsatz.";
        let c = map.apply(s);
        assert_eq!(c.chars().count(), s.chars().count());
        assert_eq!(map.invert(&c), s);
    }

    #[test]
    fn map_file_round_trips_byte_identically() {
        let map = build_map("hin", 42, Some("Manthi")).unwrap();
        let text = map.to_text();
        let back = CipherMap::from_text(&text).unwrap();
        assert_eq!(back, map);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_non_bijective_files() {
        let text = format!("{MAGIC}\nlanguage\tspa\ncl_name\tX\nseed\t1\nscript\tlatin_ext\nU+0061\tU+0065\nU+0062\tU+0065\n");
        assert!(CipherMap::from_text(&text).is_err());
        let text = format!("{MAGIC}\nlanguage\tspa\ncl_name\tX\nseed\t1\nscript\tlatin_ext\nU+0061\tU+0065\n");
        assert!(CipherMap::from_text(&text).is_err());
    }

    #[test]
    fn default_name_is_deterministic() {
        let a = build_map("fra", 8, None).unwrap();
        assert_eq!(a.cl_name(), pseudo_name(8));
        assert!(a.cl_name().chars().next().unwrap().is_uppercase());
    }

    #[test]
    fn unknown_language_is_an_error() {
        assert!(build_map("xx", 1, None).is_err());
    }

    proptest::proptest! {
        #[test]
        fn any_seed_round_trips_any_text(seed in proptest::prelude::any::<u64>(), s in "\\PC{0,60}") {
            let map = build_map("spa", seed, None).unwrap();
            let s = crate::text::normalize(&s);
            let c = map.apply(&s);
            proptest::prop_assert_eq!(c.chars().count(), s.chars().count());
            proptest::prop_assert_eq!(map.invert(&c), s);
        }
    }
}
