//! Per-script character inventories partitioned into cipher classes.
//!
//! Inventories are data (`data/inventories.toml`), not code: a script lists the
//! lowercase members of each class, and a language picks a script and adds its
//! own letters. Uppercase letters are never listed; they classify through
//! their case pair.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_INVENTORIES: &str = include_str!("../data/inventories.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CipherClass {
    Consonant,
    Vowel,
    VowelDiacritic,
    Neutral,
}

impl CipherClass {
    /// Classes that take part in ciphering, in the order they are shuffled.
    pub const PERMUTED: [CipherClass; 3] =
        [CipherClass::Consonant, CipherClass::Vowel, CipherClass::VowelDiacritic];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptId {
    LatinExt,
    Devanagari,
    Telugu,
}

impl ScriptId {
    pub fn as_str(self) -> &'static str {
        match self {
            ScriptId::LatinExt => "latin_ext",
            ScriptId::Devanagari => "devanagari",
            ScriptId::Telugu => "telugu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "latin_ext" => Some(ScriptId::LatinExt),
            "devanagari" => Some(ScriptId::Devanagari),
            "telugu" => Some(ScriptId::Telugu),
            _ => None,
        }
    }
}

impl fmt::Display for ScriptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("language `{language}` refers to unknown script `{script}`")]
    UnknownScript { language: String, script: String },
    #[error("bad codepoint entry `{0}`")]
    BadCodepoint(String),
    #[error("codepoint U+{:04X} listed in both {first:?} and {second:?}", *.codepoint as u32)]
    Overlap { codepoint: char, first: CipherClass, second: CipherClass },
    #[error("case pair for U+{:04X} conflicts with another letter", *.0 as u32)]
    CaseConflict(char),
    #[error("inventory file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("reading inventory file: {0}")]
    Io(#[from] std::io::Error),
}

/// Display metadata for a registered language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageInfo {
    pub code: String,
    pub name: String,
    pub family: String,
    pub script: ScriptId,
}

/// The merged inventory of one language: script classes plus that language's
/// own letters, with case pairs resolved.
#[derive(Debug, Clone)]
pub struct ScriptInventory {
    pub language: LanguageInfo,
    classes: BTreeMap<CipherClass, Vec<char>>,
    class_of: HashMap<char, CipherClass>,
    upper_of: HashMap<char, char>,
    /// Both cases of every letter, sorted, for fast classification.
    lookup: Vec<(char, CipherClass)>,
}

impl ScriptInventory {
    pub fn script(&self) -> ScriptId {
        self.language.script
    }

    /// Lowercase members of a class in declared order.
    pub fn members(&self, class: CipherClass) -> &[char] {
        self.classes.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn classes(&self) -> impl Iterator<Item = (CipherClass, &[char])> {
        self.classes.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.classify(c) != CipherClass::Neutral
    }

    /// Class of any codepoint. Uppercase letters take the class of their case
    /// pair; everything outside the inventory is Neutral.
    pub fn classify(&self, c: char) -> CipherClass {
        match self.lookup.binary_search_by_key(&c, |p| p.0) {
            Ok(i) => self.lookup[i].1,
            Err(_) => CipherClass::Neutral,
        }
    }

    pub fn uppercase_of(&self, lower: char) -> Option<char> {
        self.upper_of.get(&lower).copied()
    }

    /// Splits a class into letters with an uppercase partner and caseless
    /// letters. Ciphers shuffle each half separately so that case can always
    /// be re-applied after mapping.
    pub fn case_partition(&self, class: CipherClass) -> (Vec<char>, Vec<char>) {
        self.members(class).iter().partition(|c| self.upper_of.contains_key(c))
    }
}

/// Classify against the inventory registered for a language.
pub fn classify(inventory: &ScriptInventory, c: char) -> CipherClass {
    inventory.classify(c)
}

#[derive(Debug, Deserialize)]
struct InventoryFile {
    #[allow(dead_code)]
    version: u32,
    #[serde(default)]
    script: Vec<ScriptRecord>,
    #[serde(default)]
    language: Vec<LanguageRecord>,
}

#[derive(Debug, Clone, Deserialize)]
struct ScriptRecord {
    id: String,
    #[serde(default)]
    consonant: Vec<String>,
    #[serde(default)]
    vowel: Vec<String>,
    #[serde(default)]
    vowel_diacritic: Vec<String>,
}

/// One language registration: script plus per-class extra letters.
#[derive(Debug, Clone, Deserialize)]
pub struct LanguageRecord {
    pub code: String,
    pub name: String,
    pub family: String,
    pub script: String,
    #[serde(default)]
    pub consonant: Vec<String>,
    #[serde(default)]
    pub vowel: Vec<String>,
    #[serde(default)]
    pub vowel_diacritic: Vec<String>,
    #[serde(default)]
    pub case_pairs: Vec<(String, String)>,
}

/// All known scripts and languages.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    scripts: BTreeMap<ScriptId, BTreeMap<CipherClass, Vec<char>>>,
    languages: BTreeMap<String, ScriptInventory>,
}

impl Registry {
    /// The inventories shipped with the crate.
    pub fn builtin() -> &'static Registry {
        static BUILTIN: OnceLock<Registry> = OnceLock::new();
        BUILTIN.get_or_init(|| {
            Registry::from_toml(BUILTIN_INVENTORIES).expect("shipped inventory file is valid")
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InventoryError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml(source: &str) -> Result<Self, InventoryError> {
        let file: InventoryFile = toml::from_str(source)?;
        let mut registry = Registry::default();
        for record in file.script {
            let id = ScriptId::parse(&record.id).ok_or_else(|| InventoryError::UnknownScript {
                language: String::new(),
                script: record.id.clone(),
            })?;
            let mut classes = BTreeMap::new();
            for (class, entries) in [
                (CipherClass::Consonant, &record.consonant),
                (CipherClass::Vowel, &record.vowel),
                (CipherClass::VowelDiacritic, &record.vowel_diacritic),
            ] {
                classes.insert(class, parse_entries(entries)?);
            }
            check_disjoint(&classes)?;
            registry.scripts.insert(id, classes);
        }
        for record in file.language {
            registry.register(record)?;
        }
        Ok(registry)
    }

    /// Adds (or replaces) a language. Letters listed by the language move out
    /// of whichever base class held them.
    pub fn register(&mut self, record: LanguageRecord) -> Result<(), InventoryError> {
        let script = ScriptId::parse(&record.script)
            .filter(|id| self.scripts.contains_key(id))
            .ok_or_else(|| InventoryError::UnknownScript {
                language: record.code.clone(),
                script: record.script.clone(),
            })?;
        let mut classes = self.scripts[&script].clone();
        let mut extras: BTreeMap<CipherClass, Vec<char>> = BTreeMap::new();
        for (class, entries) in [
            (CipherClass::Consonant, &record.consonant),
            (CipherClass::Vowel, &record.vowel),
            (CipherClass::VowelDiacritic, &record.vowel_diacritic),
        ] {
            extras.insert(class, parse_entries(entries)?);
        }
        check_disjoint(&extras)?;
        let moved: HashSet<char> = extras.values().flatten().copied().collect();
        for (class, members) in classes.iter_mut() {
            members.retain(|c| !moved.contains(c));
            for c in &extras[class] {
                members.push(*c);
            }
        }
        let mut class_of = HashMap::new();
        for (class, members) in &classes {
            for c in members {
                class_of.insert(*c, *class);
            }
        }

        let mut upper_of = HashMap::new();
        let mut lower_of = HashMap::new();
        for (lower, upper) in &record.case_pairs {
            let lower = parse_single(lower)?;
            let upper = parse_single(upper)?;
            if !class_of.contains_key(&lower)
                || class_of.contains_key(&upper)
                || lower_of.contains_key(&upper)
            {
                return Err(InventoryError::CaseConflict(lower));
            }
            upper_of.insert(lower, upper);
            lower_of.insert(upper, lower);
        }
        for members in classes.values() {
            for &lower in members {
                if upper_of.contains_key(&lower) {
                    continue;
                }
                if let Some(upper) = simple_uppercase(lower) {
                    if class_of.contains_key(&upper) || lower_of.contains_key(&upper) {
                        continue;
                    }
                    upper_of.insert(lower, upper);
                    lower_of.insert(upper, lower);
                }
            }
        }

        let mut lookup: Vec<(char, CipherClass)> = class_of
            .iter()
            .map(|(c, k)| (*c, *k))
            .chain(lower_of.iter().map(|(u, l)| (*u, class_of[l])))
            .collect();
        lookup.sort_unstable_by_key(|p| p.0);
        let inventory = ScriptInventory {
            language: LanguageInfo {
                code: record.code.clone(),
                name: record.name,
                family: record.family,
                script,
            },
            classes,
            class_of,
            upper_of,
            lookup,
        };
        self.languages.insert(record.code, inventory);
        Ok(())
    }

    pub fn inventory_for(&self, language: &str) -> Result<&ScriptInventory, InventoryError> {
        self.languages
            .get(language)
            .ok_or_else(|| InventoryError::UnknownLanguage(language.to_string()))
    }

    pub fn language(&self, code: &str) -> Result<&LanguageInfo, InventoryError> {
        self.inventory_for(code).map(|inv| &inv.language)
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageInfo> {
        self.languages.values().map(|inv| &inv.language)
    }
}

/// Shorthand for the shipped registry.
pub fn inventory_for(language: &str) -> Result<&'static ScriptInventory, InventoryError> {
    Registry::builtin().inventory_for(language)
}

/// Unicode simple uppercase, accepted only when it is a single codepoint that
/// lowercases straight back.
fn simple_uppercase(lower: char) -> Option<char> {
    let mut up = lower.to_uppercase();
    let upper = up.next()?;
    if up.next().is_some() || upper == lower {
        return None;
    }
    let mut down = upper.to_lowercase();
    (down.next() == Some(lower) && down.next().is_none()).then_some(upper)
}

fn check_disjoint(classes: &BTreeMap<CipherClass, Vec<char>>) -> Result<(), InventoryError> {
    let mut seen: HashMap<char, CipherClass> = HashMap::new();
    for (class, members) in classes {
        for c in members {
            if let Some(first) = seen.insert(*c, *class) {
                return Err(InventoryError::Overlap { codepoint: *c, first, second: *class });
            }
        }
    }
    Ok(())
}

fn parse_entries(entries: &[String]) -> Result<Vec<char>, InventoryError> {
    let mut out = Vec::new();
    for entry in entries {
        if let Some((lo, hi)) = entry.split_once("..") {
            let lo = parse_single(lo)? as u32;
            let hi = parse_single(hi)? as u32;
            if lo > hi {
                return Err(InventoryError::BadCodepoint(entry.clone()));
            }
            for cp in lo..=hi {
                out.push(char::from_u32(cp).ok_or_else(|| InventoryError::BadCodepoint(entry.clone()))?);
            }
        } else {
            out.push(parse_single(entry)?);
        }
    }
    let mut seen = HashSet::new();
    out.retain(|c| seen.insert(*c));
    Ok(out)
}

fn parse_single(entry: &str) -> Result<char, InventoryError> {
    let entry = entry.trim();
    if let Some(hex) = entry.strip_prefix("U+").or_else(|| entry.strip_prefix("u+")) {
        return u32::from_str_radix(hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| InventoryError::BadCodepoint(entry.to_string()));
    }
    let mut chars = entry.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(InventoryError::BadCodepoint(entry.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUPPORTED: [&str; 10] = ["deu", "tur", "fra", "spa", "tel", "hin", "mar", "vie", "ces", "pol"];

    #[test]
    fn classify_examples() {
        let spa = inventory_for("spa").unwrap();
        assert_eq!(spa.classify('a'), CipherClass::Vowel);
        assert_eq!(spa.classify('.'), CipherClass::Neutral);
        assert_eq!(spa.classify('ñ'), CipherClass::Consonant);
        assert_eq!(spa.classify('Ñ'), CipherClass::Consonant);
        assert_eq!(spa.classify('É'), CipherClass::Vowel);
        assert_eq!(spa.classify('7'), CipherClass::Neutral);
        let hin = inventory_for("hin").unwrap();
        assert_eq!(hin.classify('\u{093E}'), CipherClass::VowelDiacritic);
        assert_eq!(hin.classify('a'), CipherClass::Neutral);
    }

    #[test]
    fn all_supported_languages_registered() {
        for code in SUPPORTED {
            let inv = inventory_for(code).unwrap();
            let total: usize = inv.classes().map(|(_, m)| m.len()).sum();
            assert_eq!(total, inv.len(), "{code}: duplicate codepoints across classes");
        }
        assert!(matches!(inventory_for("xx"), Err(InventoryError::UnknownLanguage(_))));
    }

    #[test]
    fn french_extensions_land_in_their_classes() {
        let fra = inventory_for("fra").unwrap();
        assert_eq!(fra.classify('é'), CipherClass::Vowel);
        assert_eq!(fra.classify('è'), CipherClass::Vowel);
        assert_eq!(fra.classify('ç'), CipherClass::Consonant);
    }

    #[test]
    fn latin_has_no_vowel_diacritics_indic_does() {
        for code in ["deu", "tur", "fra", "spa", "vie", "ces", "pol"] {
            assert!(inventory_for(code).unwrap().members(CipherClass::VowelDiacritic).is_empty());
        }
        for code in ["hin", "mar", "tel"] {
            let inv = inventory_for(code).unwrap();
            for class in CipherClass::PERMUTED {
                assert!(!inv.members(class).is_empty(), "{code} {class:?}");
            }
        }
    }

    #[test]
    fn language_letters_move_between_classes() {
        assert_eq!(inventory_for("pol").unwrap().classify('y'), CipherClass::Vowel);
        assert_eq!(inventory_for("spa").unwrap().classify('y'), CipherClass::Consonant);
    }

    #[test]
    fn turkish_case_pairs_override_unicode() {
        let tur = inventory_for("tur").unwrap();
        assert_eq!(tur.uppercase_of('ı'), Some('I'));
        assert_eq!(tur.uppercase_of('i'), Some('İ'));
        assert_eq!(tur.classify('I'), CipherClass::Vowel);
        assert_eq!(tur.classify('İ'), CipherClass::Vowel);
        let deu = inventory_for("deu").unwrap();
        assert_eq!(deu.uppercase_of('ß'), Some('ẞ'));
    }

    #[test]
    fn vietnamese_tone_vowels_are_atomic() {
        let vie = inventory_for("vie").unwrap();
        for c in ['ệ', 'ử', 'ỹ', 'ầ'] {
            assert_eq!(vie.classify(c), CipherClass::Vowel, "{c}");
        }
        assert_eq!(vie.classify('Ệ'), CipherClass::Vowel);
        assert_eq!(vie.classify('đ'), CipherClass::Consonant);
    }

    // Dependent vowel signs of the Devanagari block, enumerated once from the
    // Unicode character names ("DEVANAGARI VOWEL SIGN ...") restricted to the
    // signs used in modern Hindi/Marathi orthography.
    const DEVANAGARI_VOWEL_SIGNS: [u32; 17] = [
        0x093E, 0x093F, 0x0940, 0x0941, 0x0942, 0x0943, 0x0944, 0x0945, 0x0946, 0x0947, 0x0948,
        0x0949, 0x094A, 0x094B, 0x094C, 0x0962, 0x0963,
    ];
    const TELUGU_VOWEL_SIGNS: [u32; 15] = [
        0x0C3E, 0x0C3F, 0x0C40, 0x0C41, 0x0C42, 0x0C43, 0x0C44, 0x0C46, 0x0C47, 0x0C48, 0x0C4A,
        0x0C4B, 0x0C4C, 0x0C62, 0x0C63,
    ];

    #[test]
    fn dependent_vowel_signs_match_unicode_enumeration() {
        for code in ["hin", "mar"] {
            let inv = inventory_for(code).unwrap();
            let listed: Vec<u32> =
                inv.members(CipherClass::VowelDiacritic).iter().map(|c| *c as u32).collect();
            assert_eq!(listed, DEVANAGARI_VOWEL_SIGNS);
        }
        let tel = inventory_for("tel").unwrap();
        let listed: Vec<u32> =
            tel.members(CipherClass::VowelDiacritic).iter().map(|c| *c as u32).collect();
        assert_eq!(listed, TELUGU_VOWEL_SIGNS);
    }

    #[test]
    fn indic_signs_that_are_not_vowels_stay_neutral() {
        let hin = inventory_for("hin").unwrap();
        // anusvara, visarga, nukta, virama, danda, digit zero
        for cp in [0x0902, 0x0903, 0x093C, 0x094D, 0x0964, 0x0966] {
            assert_eq!(hin.classify(char::from_u32(cp).unwrap()), CipherClass::Neutral);
        }
    }

    #[test]
    fn rejects_overlapping_classes() {
        let src = r#"
            version = 1
            [[script]]
            id = "latin_ext"
            consonant = ["a"]
            vowel = ["a"]
        "#;
        assert!(matches!(Registry::from_toml(src), Err(InventoryError::Overlap { .. })));
    }

    #[test]
    fn user_registration_extends_registry() {
        let mut reg = Registry::builtin().clone();
        reg.register(LanguageRecord {
            code: "ita".into(),
            name: "Italian".into(),
            family: "Romance".into(),
            script: "latin_ext".into(),
            consonant: vec![],
            vowel: vec!["à".into(), "è".into(), "ì".into(), "ò".into(), "ù".into()],
            vowel_diacritic: vec![],
            case_pairs: vec![],
        })
        .unwrap();
        assert_eq!(reg.inventory_for("ita").unwrap().classify('ò'), CipherClass::Vowel);
    }
}
