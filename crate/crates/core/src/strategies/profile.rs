use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StrategyError;

/// The eight word-order features every profile must describe, in the order
/// they are rendered.
pub const WORD_ORDER_FEATURES: [&str; 8] = [
    "sentence",
    "object_verb",
    "adposition",
    "genitive",
    "adjective",
    "relative_clause",
    "interrogatives",
    "negation",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordOrder {
    pub sentence: String,
    pub object_verb: String,
    pub adposition: String,
    pub genitive: String,
    pub adjective: String,
    pub relative_clause: String,
    pub interrogatives: String,
    pub negation: String,
}

impl WordOrder {
    fn in_order(&self) -> [&str; 8] {
        [
            &self.sentence,
            &self.object_verb,
            &self.adposition,
            &self.genitive,
            &self.adjective,
            &self.relative_clause,
            &self.interrogatives,
            &self.negation,
        ]
    }
}

/// A high-level syntax description. Text may use `{name}` for the language's
/// display name so one file serves any cipher of the language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntaxProfile {
    pub family_line: String,
    pub word_order: WordOrder,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl SyntaxProfile {
    pub fn from_toml(text: &str) -> Result<Self, StrategyError> {
        let profile: SyntaxProfile =
            toml::from_str(text).map_err(|e| StrategyError::Profile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StrategyError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| StrategyError::Profile(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.family_line.trim().is_empty() {
            return Err(StrategyError::Profile("family_line is empty".into()));
        }
        for (key, value) in WORD_ORDER_FEATURES.iter().zip(self.word_order.in_order()) {
            if value.trim().is_empty() {
                return Err(StrategyError::Profile(format!("word_order.{key} is empty")));
            }
        }
        Ok(())
    }

    /// One line per entry: family line, the eight features, then notes.
    pub fn render(&self, name: &str) -> String {
        std::iter::once(self.family_line.as_str())
            .chain(self.word_order.in_order())
            .chain(self.notes.iter().map(String::as_str))
            .map(|line| line.replace("{name}", name))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROMANCE: &str = r#"
family_line = "{name} is a Romance language."
notes = ["Morphosyntactic profile: {name} is moderately fusional."]

[word_order]
sentence = "Sentence-level word order (SVO): {name} is typically SVO."
object_verb = "Object-verb order: (VO) The verb precedes the object."
adposition = "a"
genitive = "b"
adjective = "c"
relative_clause = "d"
interrogatives = "e"
negation = "f"
"#;

    #[test]
    fn renders_family_line_first_with_name() {
        let p = SyntaxProfile::from_toml(ROMANCE).unwrap();
        let text = p.render("Serra");
        assert!(text.starts_with("Serra is a Romance language.\nSentence-level word order (SVO): Serra is typically SVO."));
        assert_eq!(text.lines().count(), 10);
    }

    #[test]
    fn every_feature_required() {
        let missing = ROMANCE.replace("negation = \"f\"\n", "");
        assert!(SyntaxProfile::from_toml(&missing).is_err());
        let blank = ROMANCE.replace("negation = \"f\"", "negation = \" \"");
        assert!(SyntaxProfile::from_toml(&blank).is_err());
        let extra = format!("{ROMANCE}word_stress = \"g\"\n");
        assert!(SyntaxProfile::from_toml(&extra).is_err());
    }
}
